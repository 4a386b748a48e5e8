//! Epsilon-free NFAs with a single initial and a single final state,
//! products, 1-weakness, and unary length abstractions `A ∪ (A' + bℕ)`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::graph;
use crate::terms::Letter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomataError {
    #[error("state {state} out of range (automaton has {states} states)")]
    BadState { state: usize, states: usize },
    #[error("letter {0} outside the alphabet")]
    BadLetter(u16),
    #[error("alphabet sizes differ ({0} vs {1})")]
    AlphabetMismatch(usize, usize),
    #[error("intersection of an empty list of automata")]
    EmptyList,
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("length abstraction constant {value} exceeds the quadratic bound {bound}")]
    MagnitudeBound { value: u64, bound: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Nfa {
    alphabet_size: usize,
    /// Outgoing transitions per state, sorted and deduplicated.
    delta: Vec<Vec<(Letter, usize)>>,
    initial: usize,
    final_state: usize,
}

impl Nfa {
    pub fn new(alphabet_size: usize, states: usize, initial: usize, final_state: usize) -> Result<Self, AutomataError> {
        for s in [initial, final_state] {
            if s >= states {
                return Err(AutomataError::BadState { state: s, states });
            }
        }
        Ok(Nfa { alphabet_size, delta: vec![Vec::new(); states], initial, final_state })
    }

    pub fn from_transitions(
        alphabet_size: usize,
        states: usize,
        transitions: impl IntoIterator<Item = (usize, Letter, usize)>,
        initial: usize,
        final_state: usize,
    ) -> Result<Self, AutomataError> {
        let mut nfa = Nfa::new(alphabet_size, states, initial, final_state)?;
        for (p, a, q) in transitions {
            nfa.add_transition(p, a, q)?;
        }
        Ok(nfa)
    }

    pub fn add_transition(&mut self, p: usize, a: Letter, q: usize) -> Result<(), AutomataError> {
        self.check_state(p)?;
        self.check_state(q)?;
        if a.0 as usize >= self.alphabet_size {
            return Err(AutomataError::BadLetter(a.0));
        }
        let out = &mut self.delta[p];
        if let Err(pos) = out.binary_search(&(a, q)) {
            out.insert(pos, (a, q));
        }
        Ok(())
    }

    fn check_state(&self, s: usize) -> Result<(), AutomataError> {
        if s < self.num_states() {
            Ok(())
        } else {
            Err(AutomataError::BadState { state: s, states: self.num_states() })
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn final_state(&self) -> usize {
        self.final_state
    }

    pub fn successors(&self, p: usize) -> &[(Letter, usize)] {
        &self.delta[p]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, Letter, usize)> + '_ {
        self.delta.iter().enumerate().flat_map(|(p, out)| out.iter().map(move |&(a, q)| (p, a, q)))
    }

    pub fn has_transition(&self, p: usize, a: Letter, q: usize) -> bool {
        self.delta[p].binary_search(&(a, q)).is_ok()
    }

    /// The same automaton with initial state `p` and final state `q`.
    pub fn slice(&self, p: usize, q: usize) -> Result<Nfa, AutomataError> {
        self.check_state(p)?;
        self.check_state(q)?;
        Ok(Nfa { initial: p, final_state: q, ..self.clone() })
    }

    fn step(&self, current: &[bool], letter: Option<Letter>) -> Vec<bool> {
        let mut next = vec![false; self.num_states()];
        for (p, _) in current.iter().enumerate().filter(|(_, &on)| on) {
            for &(a, q) in &self.delta[p] {
                if letter.is_none_or(|l| l == a) {
                    next[q] = true;
                }
            }
        }
        next
    }

    /// Whether the slice `A_{p,q}` accepts `w` (subset simulation).
    pub fn accepts_between(&self, p: usize, q: usize, w: &[Letter]) -> bool {
        let mut current = vec![false; self.num_states()];
        current[p] = true;
        for &a in w {
            current = self.step(&current, Some(a));
            if !current.iter().any(|&b| b) {
                return false;
            }
        }
        current[q]
    }

    pub fn accepts(&self, w: &[Letter]) -> bool {
        self.accepts_between(self.initial, self.final_state, w)
    }

    /// Product automaton recognising the intersection of the languages.
    /// Only product states reachable from the initial tuple are built; the
    /// final tuple is always present.
    pub fn intersection(auts: &[&Nfa]) -> Result<Nfa, AutomataError> {
        let first = auts.first().ok_or(AutomataError::EmptyList)?;
        for a in auts {
            if a.alphabet_size != first.alphabet_size {
                return Err(AutomataError::AlphabetMismatch(first.alphabet_size, a.alphabet_size));
            }
        }
        if auts.len() == 1 {
            return Ok((*first).clone());
        }
        let start: Vec<usize> = auts.iter().map(|a| a.initial).collect();
        let fin: Vec<usize> = auts.iter().map(|a| a.final_state).collect();
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut tuples = vec![start.clone()];
        index.insert(start, 0);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let tuple = tuples[i].clone();
            for letter in 0..first.alphabet_size {
                let letter = Letter(letter as u16);
                // All combinations of letter-successors of the components.
                let options: Vec<Vec<usize>> = auts
                    .iter()
                    .zip(&tuple)
                    .map(|(a, &p)| a.delta[p].iter().filter(|(b, _)| *b == letter).map(|&(_, q)| q).collect())
                    .collect();
                if options.iter().any(Vec::is_empty) {
                    continue;
                }
                for target in cartesian(&options) {
                    let j = match index.get(&target) {
                        Some(&j) => j,
                        None => {
                            let j = tuples.len();
                            index.insert(target.clone(), j);
                            tuples.push(target);
                            queue.push_back(j);
                            j
                        }
                    };
                    edges.push((i, letter, j));
                }
            }
        }
        let final_state = match index.get(&fin) {
            Some(&j) => j,
            None => {
                tuples.push(fin);
                tuples.len() - 1
            }
        };
        Nfa::from_transitions(first.alphabet_size, tuples.len(), edges, 0, final_state)
    }

    /// Every strongly connected component is a single state (self-loops
    /// allowed).
    pub fn is_one_weak(&self) -> bool {
        let succ: Vec<Vec<usize>> = self.delta.iter().map(|out| out.iter().map(|&(_, q)| q).collect()).collect();
        graph::strongly_connected_components(&succ).iter().all(|c| c.len() == 1)
    }

    /// The lengths of accepted words as `A ∪ (A' + bℕ)` in canonical form:
    /// `A ⊆ [0, t)`, `A' ⊆ [t, t + b)` with minimal period `b` and minimal
    /// threshold `t`.
    ///
    /// The unary projection is simulated on state sets; the sequence of
    /// sets reachable in exactly `k` steps is eventually periodic and the
    /// first repetition fixes threshold and period.
    pub fn length_abstraction(&self) -> UnarySemilinear {
        let n = self.num_states();
        let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut member: Vec<bool> = Vec::new();
        let mut current = vec![false; n];
        current[self.initial] = true;
        let (start, period) = loop {
            if let Some(&i) = seen.get(&current) {
                break (i, member.len() - i);
            }
            seen.insert(current.clone(), member.len());
            member.push(current[self.final_state]);
            current = self.step(&current, None);
        };
        UnarySemilinear::from_ultimately_periodic(&member, start, period)
    }

    /// Like [`Nfa::length_abstraction`], but fails when a constant exceeds
    /// `n²` for an `n`-state automaton.
    pub fn length_abstraction_checked(&self) -> Result<UnarySemilinear, AutomataError> {
        let u = self.length_abstraction();
        let n = self.num_states() as u64;
        let bound = (n * n).max(1);
        let value = u.max_constant();
        if value > bound {
            return Err(AutomataError::MagnitudeBound { value, bound });
        }
        Ok(u)
    }

    /// Some accepted word of exactly `len` letters, if one exists.
    pub fn word_of_length(&self, len: usize) -> Option<Vec<Letter>> {
        // alive[k][p]: p reaches the final state in exactly k steps.
        let n = self.num_states();
        let mut alive = vec![vec![false; n]; len + 1];
        alive[0][self.final_state] = true;
        for k in 1..=len {
            for p in 0..n {
                alive[k][p] = self.delta[p].iter().any(|&(_, q)| alive[k - 1][q]);
            }
        }
        if !alive[len][self.initial] {
            return None;
        }
        let mut word = Vec::with_capacity(len);
        let mut p = self.initial;
        for k in (1..=len).rev() {
            let &(a, q) = self.delta[p].iter().find(|&&(_, q)| alive[k - 1][q])?;
            word.push(a);
            p = q;
        }
        Some(word)
    }

    pub fn is_empty_language(&self) -> bool {
        self.length_abstraction().is_empty()
    }
}

fn cartesian(options: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(options.len())];
    for choices in options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&c| {
                    let mut next = prefix.clone();
                    next.push(c);
                    next
                })
            })
            .collect();
    }
    out
}

/// A set of naturals `A ∪ (A' + bℕ)`; `b ≥ 1` is always stored, finite
/// sets have `A'` empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnarySemilinear {
    finite: BTreeSet<u64>,
    periodic: BTreeSet<u64>,
    period: u64,
}

impl UnarySemilinear {
    pub fn new(
        finite: impl IntoIterator<Item = u64>,
        periodic: impl IntoIterator<Item = u64>,
        period: u64,
    ) -> Result<Self, AutomataError> {
        if period == 0 {
            return Err(AutomataError::ZeroPeriod);
        }
        Ok(UnarySemilinear { finite: finite.into_iter().collect(), periodic: periodic.into_iter().collect(), period })
    }

    pub fn finite_set(values: impl IntoIterator<Item = u64>) -> Self {
        UnarySemilinear { finite: values.into_iter().collect(), periodic: BTreeSet::new(), period: 1 }
    }

    /// All of ℕ.
    pub fn naturals() -> Self {
        UnarySemilinear { finite: BTreeSet::new(), periodic: BTreeSet::from([0]), period: 1 }
    }

    pub fn empty() -> Self {
        UnarySemilinear::finite_set([])
    }

    pub(crate) fn from_ultimately_periodic(member: &[bool], start: usize, period: usize) -> Self {
        let at = |k: usize| if k < start { member[k] } else { member[start + (k - start) % period] };
        let mut b = period;
        for d in (1..=period).filter(|d| period.is_multiple_of(*d)) {
            if (start..start + period).all(|k| at(k) == at(k + d)) {
                b = d;
                break;
            }
        }
        let mut t = start;
        while t > 0 && at(t - 1) == at(t - 1 + b) {
            t -= 1;
        }
        let finite = (0..t).filter(|&k| at(k)).map(|k| k as u64);
        let periodic: BTreeSet<u64> = (t..t + b).filter(|&k| at(k)).map(|k| k as u64).collect();
        if periodic.is_empty() {
            UnarySemilinear::finite_set(finite)
        } else {
            UnarySemilinear { finite: finite.collect(), periodic, period: b as u64 }
        }
    }

    pub fn finite(&self) -> &BTreeSet<u64> {
        &self.finite
    }

    pub fn periodic(&self) -> &BTreeSet<u64> {
        &self.periodic
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn contains(&self, n: u64) -> bool {
        self.finite.contains(&n) || self.periodic.iter().any(|&a| n >= a && (n - a).is_multiple_of(self.period))
    }

    pub fn is_empty(&self) -> bool {
        self.finite.is_empty() && self.periodic.is_empty()
    }

    pub fn is_naturals(&self) -> bool {
        (0..self.max_constant() + self.period + 1).all(|n| self.contains(n))
    }

    /// Largest number among `A`, `A'` and `b`.
    pub fn max_constant(&self) -> u64 {
        let a = self.finite.iter().chain(&self.periodic).copied().max().unwrap_or(0);
        a.max(if self.periodic.is_empty() { 0 } else { self.period })
    }
}
