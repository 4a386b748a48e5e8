//! Counter systems CA(E) and CA(E,S): one control state per rewrite state,
//! one counter per variable, and a Presburger relation per rewrite edge.
//!
//! Concrete semantics use the strengthened subtraction `z ≥ 1`: a guessed
//! prefix `σ(z)` in rule P4 is nonempty (the empty case is an erase step).
//! With it every step strictly decreases `(Σ counters, |E|)`
//! lexicographically, so exhaustive search terminates.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::automata::{Nfa, UnarySemilinear};
use crate::graph;
use crate::nielsen::{dot_escape, NielsenError, RegularConstraint, RewriteGraph, RewriteState, Rewriter, RuleLabel};
use crate::terms::{Equation, Signature, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterError {
    #[error(transparent)]
    Nielsen(#[from] NielsenError),
    #[error("configuration is in state {found}, transition starts at {expected}")]
    WrongState { expected: usize, found: usize },
    #[error("configuration has {found} values for {expected} counters")]
    BadConfiguration { expected: usize, found: usize },
    #[error("transitions do not form a cycle")]
    NotACycle,
    #[error("search exceeded {cap} configurations")]
    BudgetExceeded { cap: usize },
}

/// Counters are addressed by position in [`CounterSystem::counters`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Id,
    /// `y' = y − z` with `1 ≤ z ≤ y`.
    Sub {
        y: usize,
        z: usize,
    },
    /// `y' = y − 1` with `y ≥ 1`.
    Dec(usize),
    /// `y = 0`, identity otherwise.
    EraseTest(usize),
}

impl RelationKind {
    /// The counter that changes, if any.
    pub fn reduced(&self) -> Option<usize> {
        match *self {
            RelationKind::Sub { y, .. } | RelationKind::Dec(y) => Some(y),
            RelationKind::Id | RelationKind::EraseTest(_) => None,
        }
    }
}

/// A guard `counter ∈ U`.
pub type Guard = (usize, UnarySemilinear);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionRelation {
    pub kind: RelationKind,
    /// Checked on the values before the step, sorted by counter.
    pub pre_guards: Vec<Guard>,
    /// Checked on the values after the step, sorted by counter.
    pub post_guards: Vec<Guard>,
}

impl TransitionRelation {
    pub fn plain(kind: RelationKind) -> Self {
        TransitionRelation { kind, pre_guards: Vec::new(), post_guards: Vec::new() }
    }

    pub fn is_guarded(&self) -> bool {
        !self.pre_guards.is_empty() || !self.post_guards.is_empty()
    }

    /// Successor values, or `None` if the relation does not hold.
    pub fn apply(&self, values: &[u64]) -> Option<Vec<u64>> {
        if !guards_hold(&self.pre_guards, values) {
            return None;
        }
        let mut next = values.to_vec();
        match self.kind {
            RelationKind::Id => {}
            RelationKind::Sub { y, z } => {
                if values[z] == 0 || values[z] > values[y] {
                    return None;
                }
                next[y] -= values[z];
            }
            RelationKind::Dec(y) => {
                if values[y] == 0 {
                    return None;
                }
                next[y] -= 1;
            }
            RelationKind::EraseTest(y) => {
                if values[y] != 0 {
                    return None;
                }
            }
        }
        guards_hold(&self.post_guards, &next).then_some(next)
    }
}

fn guards_hold(guards: &[Guard], values: &[u64]) -> bool {
    guards.iter().all(|(c, u)| u.contains(values[*c]))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: usize,
    pub relation: TransitionRelation,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: usize,
    pub values: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct CounterSystem {
    /// Counter `i` tracks the length of `counters[i]`.
    pub counters: Vec<Var>,
    /// Control state `i` is rewrite state `states[i]`; state 0 is the root.
    pub states: Vec<RewriteState>,
    pub transitions: Vec<Transition>,
    /// Outgoing transition indices per state.
    pub out: Vec<Vec<usize>>,
}

impl CounterSystem {
    /// CA(E) for an unconstrained quadratic equation.
    pub fn build(e: &Equation, cap: usize) -> Result<CounterSystem, CounterError> {
        Self::build_with_constraints(&Rewriter::default(), RewriteState::unconstrained(e.clone()), cap)
    }

    /// CA(E,S). Counters are the variables of the root equation (plus any
    /// constrained variable the root mentions).
    pub fn build_with_constraints(
        rewriter: &Rewriter,
        root: RewriteState,
        cap: usize,
    ) -> Result<CounterSystem, CounterError> {
        let mut counters: Vec<Var> = root.equation.variables().into_iter().collect();
        counters.extend(root.constrained_vars());
        counters.sort_unstable();
        counters.dedup();
        let graph = rewriter.build_graph(root, cap)?;
        Ok(Self::from_graph(rewriter, counters, graph))
    }

    fn from_graph(rewriter: &Rewriter, counters: Vec<Var>, graph: RewriteGraph) -> CounterSystem {
        let position: HashMap<Var, usize> = counters.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut lengths = GuardCache::new(&rewriter.automata);
        let mut transitions = Vec::new();
        for e in &graph.edges {
            let kind = relation_kind(e.edge.rule, |v| position[&v]);
            let pre = graph.nodes[e.source].constraints().to_vec();
            let mut post = graph.nodes[e.target].constraints().to_vec();
            post.extend_from_slice(&e.edge.retired);
            let relation = TransitionRelation {
                kind,
                pre_guards: lengths.guards(&pre, &position),
                post_guards: lengths.guards(&post, &position),
            };
            // A guard with an empty length set makes the relation empty.
            if relation.pre_guards.iter().chain(&relation.post_guards).any(|(_, u)| u.is_empty()) {
                continue;
            }
            transitions.push(Transition { source: e.source, relation, target: e.target });
        }
        transitions.sort();
        transitions.dedup();
        let mut out = vec![Vec::new(); graph.nodes.len()];
        for (i, t) in transitions.iter().enumerate() {
            out[t.source].push(i);
        }
        CounterSystem { counters, states: graph.nodes, transitions, out }
    }

    pub fn root(&self) -> usize {
        0
    }

    /// The control state `(ε = ε, ∅)`, if reachable.
    pub fn final_state(&self) -> Option<usize> {
        self.states.iter().position(RewriteState::is_final)
    }

    pub fn counter_of(&self, v: Var) -> Option<usize> {
        self.counters.iter().position(|&c| c == v)
    }

    pub fn step(&self, c: &Configuration, t: usize) -> Result<Option<Configuration>, CounterError> {
        let t = &self.transitions[t];
        if c.state != t.source {
            return Err(CounterError::WrongState { expected: t.source, found: c.state });
        }
        self.check_values(&c.values)?;
        Ok(t.relation.apply(&c.values).map(|values| Configuration { state: t.target, values }))
    }

    fn check_values(&self, values: &[u64]) -> Result<(), CounterError> {
        if values.len() != self.counters.len() {
            return Err(CounterError::BadConfiguration { expected: self.counters.len(), found: values.len() });
        }
        Ok(())
    }

    fn successor_lists(&self) -> Vec<Vec<usize>> {
        self.out.iter().map(|ts| ts.iter().map(|&t| self.transitions[t].target).collect()).collect()
    }

    /// Flatness and the simple cycles. In a flat system every nontrivial
    /// strongly connected component is exactly one simple cycle; cycles are
    /// returned as transition indices starting at the smallest state.
    pub fn flatness(&self) -> Flatness {
        let comps = graph::strongly_connected_components(&self.successor_lists());
        let id = graph::component_ids(&comps, self.states.len());
        let mut flat = true;
        let mut cycles = Vec::new();
        for (c, members) in comps.iter().enumerate() {
            let internal: Vec<Vec<usize>> = members
                .iter()
                .map(|&s| self.out[s].iter().copied().filter(|&t| id[self.transitions[t].target] == c).collect())
                .collect();
            let edges: usize = internal.iter().map(Vec::len).sum();
            if edges == 0 {
                continue;
            }
            if edges != members.len() || internal.iter().any(|ts| ts.len() != 1) {
                flat = false;
                continue;
            }
            let mut cycle = Vec::new();
            let start = members[0];
            let mut at = start;
            loop {
                let t = internal[members.binary_search(&at).expect("member")][0];
                cycle.push(t);
                at = self.transitions[t].target;
                if at == start {
                    break;
                }
            }
            cycles.push(cycle);
        }
        Flatness { flat, cycles }
    }

    pub fn is_flat(&self) -> bool {
        self.flatness().flat
    }

    /// The reduced counter `y` if every transition of `cycle` is `Sub(y,·)`
    /// or `Dec(y)`.
    pub fn cycle_shape(&self, cycle: &[usize]) -> Result<Option<usize>, CounterError> {
        let ts: Vec<&Transition> = cycle.iter().map(|&t| &self.transitions[t]).collect();
        let closed = !ts.is_empty()
            && ts.windows(2).all(|w| w[0].target == w[1].source)
            && ts.last().map(|t| t.target) == ts.first().map(|t| t.source);
        if !closed {
            return Err(CounterError::NotACycle);
        }
        Ok(cycle_shape(ts.iter().map(|t| &t.relation.kind)))
    }

    /// Restriction to the states that are reachable from the root and can
    /// reach one of `targets`. Returns the system and the old-to-new state map.
    pub fn trim(&self, targets: &[usize]) -> (CounterSystem, Vec<Option<usize>>) {
        let succ = self.successor_lists();
        let forward = graph::reachable(&succ, self.root());
        let mut pred = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            pred[t.target].push(t.source);
        }
        let mut backward = vec![false; self.states.len()];
        let mut todo: Vec<usize> = targets.to_vec();
        for &t in targets {
            backward[t] = true;
        }
        while let Some(s) = todo.pop() {
            for &p in &pred[s] {
                if !backward[p] {
                    backward[p] = true;
                    todo.push(p);
                }
            }
        }
        let mut map = vec![None; self.states.len()];
        let mut states = Vec::new();
        for s in 0..self.states.len() {
            // The root stays at index 0 even when nothing is useful.
            if s == self.root() || (forward[s] && backward[s]) {
                map[s] = Some(states.len());
                states.push(self.states[s].clone());
            }
        }
        let transitions: Vec<Transition> = self
            .transitions
            .iter()
            .filter_map(|t| {
                let (source, target) = (map[t.source]?, map[t.target]?);
                (forward[t.source] && backward[t.target]).then(|| Transition {
                    source,
                    relation: t.relation.clone(),
                    target,
                })
            })
            .collect();
        let mut out = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            out[t.source].push(i);
        }
        (CounterSystem { counters: self.counters.clone(), states, transitions, out }, map)
    }

    pub fn to_dot(&self, sig: &Signature) -> String {
        let mut s = String::from("digraph counters {\n  node [shape=box];\n");
        for (i, n) in self.states.iter().enumerate() {
            let _ = writeln!(s, "  q{i} [label=\"{}\"];", dot_escape(&sig.fmt_equation(&n.equation)));
        }
        for t in &self.transitions {
            let label = self.describe(&t.relation, sig);
            let _ = writeln!(s, "  q{} -> q{} [label=\"{}\"];", t.source, t.target, dot_escape(&label));
        }
        s.push_str("}\n");
        s
    }

    pub fn describe(&self, r: &TransitionRelation, sig: &Signature) -> String {
        let name = |c: usize| sig.var_name(self.counters[c]).to_string();
        let mut label = match r.kind {
            RelationKind::Id => "Id".to_string(),
            RelationKind::Sub { y, z } => format!("Sub({},{})", name(y), name(z)),
            RelationKind::Dec(y) => format!("Dec({})", name(y)),
            RelationKind::EraseTest(y) => format!("Erase({})", name(y)),
        };
        for (tag, guards) in [("pre", &r.pre_guards), ("post", &r.post_guards)] {
            for (c, u) in guards {
                let _ = write!(label, "\\n{tag} {} ∈ {}", name(*c), fmt_semilinear(u));
            }
        }
        label
    }
}

/// The counter relation of a rewrite rule, with `c` mapping variables to
/// counter positions.
pub fn relation_kind(rule: RuleLabel, c: impl Fn(Var) -> usize) -> RelationKind {
    match rule {
        RuleLabel::EraseLhsVar(x) | RuleLabel::EraseRhsVar(x) => RelationKind::EraseTest(c(x)),
        RuleLabel::P1 => RelationKind::Id,
        RuleLabel::P2(y) | RuleLabel::P3(y) => RelationKind::Dec(c(y)),
        RuleLabel::P4AlphaPrefix(x, y) => RelationKind::Sub { y: c(y), z: c(x) },
        RuleLabel::P4BetaPrefix(x, y) => RelationKind::Sub { y: c(x), z: c(y) },
    }
}

pub fn fmt_semilinear(u: &UnarySemilinear) -> String {
    let fin: Vec<String> = u.finite().iter().map(u64::to_string).collect();
    let per: Vec<String> = u.periodic().iter().map(u64::to_string).collect();
    match (fin.is_empty(), per.is_empty()) {
        (_, true) => format!("{{{}}}", fin.join(",")),
        (true, false) => format!("{{{}}}+{}N", per.join(","), u.period()),
        (false, false) => format!("{{{}}} ∪ {{{}}}+{}N", fin.join(","), per.join(","), u.period()),
    }
}

/// Shape check on relation kinds alone.
pub fn cycle_shape<'a>(kinds: impl IntoIterator<Item = &'a RelationKind>) -> Option<usize> {
    let mut reduced = None;
    for k in kinds {
        let y = k.reduced()?;
        if reduced.is_some_and(|r| r != y) {
            return None;
        }
        reduced = Some(y);
    }
    reduced
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flatness {
    pub flat: bool,
    /// Simple cycles of the components that are single cycles.
    pub cycles: Vec<Vec<usize>>,
}

/// Length guards per counter, cached by constraint set.
struct GuardCache<'a> {
    automata: &'a [Nfa],
    cache: HashMap<Vec<(usize, usize, usize)>, UnarySemilinear>,
}

impl<'a> GuardCache<'a> {
    fn new(automata: &'a [Nfa]) -> Self {
        GuardCache { automata, cache: HashMap::new() }
    }

    /// One guard `Len(⋂ constraints on v)` per constrained counter, omitting
    /// guards that accept every length.
    fn guards(&mut self, cons: &[RegularConstraint], position: &HashMap<Var, usize>) -> Vec<Guard> {
        let mut by_var: BTreeMap<usize, Vec<(usize, usize, usize)>> = BTreeMap::new();
        for c in cons {
            by_var.entry(position[&c.var]).or_default().push((c.nfa, c.from, c.to));
        }
        let mut out = Vec::new();
        for (counter, mut key) in by_var {
            key.sort_unstable();
            key.dedup();
            let u = self.length(key);
            if !u.is_naturals() {
                out.push((counter, u));
            }
        }
        out
    }

    fn length(&mut self, key: Vec<(usize, usize, usize)>) -> UnarySemilinear {
        if let Some(u) = self.cache.get(&key) {
            return u.clone();
        }
        let slices: Vec<Nfa> =
            key.iter().map(|&(n, p, q)| self.automata[n].slice(p, q).expect("validated constraint")).collect();
        let refs: Vec<&Nfa> = slices.iter().collect();
        let u = Nfa::intersection(&refs).expect("shared alphabet").length_abstraction();
        self.cache.insert(key, u.clone());
        u
    }
}

/// Steps of a run: each transition with the counter values after it.
pub type Run = Vec<(usize, Vec<u64>)>;

pub const DEFAULT_SEARCH_CAP: usize = 5_000_000;

/// Exact backward-reachability queries `(q, v) ∈ pre*(targets)` by
/// memoised depth-first search.
pub struct PreStar<'a> {
    cs: &'a CounterSystem,
    is_target: Vec<bool>,
    memo: HashMap<(usize, Vec<u64>), bool>,
    cap: usize,
}

impl<'a> PreStar<'a> {
    pub fn new(cs: &'a CounterSystem, targets: &[usize], cap: usize) -> Self {
        let mut is_target = vec![false; cs.states.len()];
        for &t in targets {
            is_target[t] = true;
        }
        PreStar { cs, is_target, memo: HashMap::new(), cap }
    }

    /// Whether some run from `(state, values)` reaches a target state.
    pub fn reaches(&mut self, state: usize, values: &[u64]) -> Result<bool, CounterError> {
        self.cs.check_values(values)?;
        self.search(state, values)
    }

    fn search(&mut self, state: usize, values: &[u64]) -> Result<bool, CounterError> {
        if self.is_target[state] {
            return Ok(true);
        }
        if let Some(&known) = self.memo.get(&(state, values.to_vec())) {
            return Ok(known);
        }
        if self.memo.len() >= self.cap {
            return Err(CounterError::BudgetExceeded { cap: self.cap });
        }
        let mut found = false;
        for &t in &self.cs.out[state] {
            let tr = &self.cs.transitions[t];
            if let Some(next) = tr.relation.apply(values) {
                if self.search(tr.target, &next)? {
                    found = true;
                    break;
                }
            }
        }
        self.memo.insert((state, values.to_vec()), found);
        Ok(found)
    }

    /// A run to a target as `(transition, values after it)` pairs.
    pub fn path(&mut self, state: usize, values: &[u64]) -> Result<Option<Run>, CounterError> {
        if !self.reaches(state, values)? {
            return Ok(None);
        }
        let mut run = Vec::new();
        let (mut at, mut current) = (state, values.to_vec());
        while !self.is_target[at] {
            let mut advanced = false;
            for &t in &self.cs.out[at] {
                let tr = &self.cs.transitions[t];
                if let Some(next) = tr.relation.apply(&current) {
                    if self.search(tr.target, &next)? {
                        run.push((t, next.clone()));
                        at = tr.target;
                        current = next;
                        advanced = true;
                        break;
                    }
                }
            }
            debug_assert!(advanced, "memo says reachable but no step continues");
            if !advanced {
                return Ok(None);
            }
        }
        Ok(Some(run))
    }
}

/// One-shot membership in `pre*(targets)`.
pub fn pre_star_membership(
    cs: &CounterSystem,
    targets: &[usize],
    c: &Configuration,
    cap: usize,
) -> Result<bool, CounterError> {
    PreStar::new(cs, targets, cap).reaches(c.state, &c.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::Letter;
    use proptest::prelude::*;

    fn sig() -> Signature {
        Signature::new(&["a", "b", "#"], &["x", "y", "z"])
    }

    fn ca(l: &str, r: &str) -> CounterSystem {
        CounterSystem::build(&sig().equation(l, r).unwrap(), 10_000).unwrap()
    }

    fn hash_ab() -> Nfa {
        Nfa::from_transitions(3, 2, [(0, Letter(2), 1), (1, Letter(0), 1), (1, Letter(1), 1)], 0, 1).unwrap()
    }

    fn ca_hash(l: &str, r: &str) -> CounterSystem {
        let e = sig().equation(l, r).unwrap();
        let cons = [RegularConstraint::new(Var(0), 0, 0, 1), RegularConstraint::new(Var(1), 0, 0, 1)];
        CounterSystem::build_with_constraints(&Rewriter::new(vec![hash_ab()]), RewriteState::new(e, cons), 10_000)
            .unwrap()
    }

    fn self_loops(cs: &CounterSystem, s: usize) -> Vec<RelationKind> {
        cs.transitions.iter().filter(|t| t.source == s && t.target == s).map(|t| t.relation.kind).collect()
    }

    #[test]
    fn trivial_equation_has_one_state() {
        let cs = ca("", "");
        assert_eq!((cs.states.len(), cs.transitions.len()), (1, 0));
        assert_eq!(cs.final_state(), Some(0));
    }

    #[test]
    fn self_loops_of_conjugacy_equations() {
        let cs = ca("x y", "y z");
        assert_eq!(self_loops(&cs, 0), vec![RelationKind::Sub { y: 1, z: 0 }]);
        let cs = ca("x y", "y x");
        let mut loops = self_loops(&cs, 0);
        loops.sort();
        assert_eq!(loops, vec![RelationKind::Sub { y: 0, z: 1 }, RelationKind::Sub { y: 1, z: 0 }]);
    }

    #[test]
    fn guards_come_from_constraints() {
        let cs = ca_hash("x y", "y z");
        let positive = UnarySemilinear::new([], [1], 1).unwrap();
        // The root splits y ∈ A_{0,1} through a midpoint; the only live
        // choice moves y into A_{1,1}, whose length guard is trivial.
        let sub = RelationKind::Sub { y: 1, z: 0 };
        let from_root: Vec<_> =
            cs.out[0].iter().map(|&t| &cs.transitions[t]).filter(|t| t.relation.kind == sub).collect();
        assert_eq!(from_root.len(), 1);
        assert!(from_root[0].relation.pre_guards.contains(&(1, positive.clone())));
        assert!(!from_root[0].relation.post_guards.iter().any(|(c, _)| *c == 1));
        // Transitions whose guards are empty never fire and are not kept.
        assert!(cs.transitions.iter().all(|t| t
            .relation
            .pre_guards
            .iter()
            .chain(&t.relation.post_guards)
            .all(|(_, u)| !u.is_empty())));
        assert!(cs.is_flat());
        // x has no ε in its language, so there is no erase edge for x at the root.
        assert!(cs.out[0].iter().all(|&t| cs.transitions[t].relation.kind != RelationKind::EraseTest(0)));
    }

    #[test]
    fn empty_constraint_set_matches_plain_construction() {
        let e = sig().equation("x y", "y z").unwrap();
        let plain = CounterSystem::build(&e, 1000).unwrap();
        let same = CounterSystem::build_with_constraints(
            &Rewriter::new(vec![hash_ab()]),
            RewriteState::unconstrained(e),
            1000,
        )
        .unwrap();
        assert_eq!(plain.transitions, same.transitions);
        assert!(plain.transitions.iter().all(|t| !t.relation.is_guarded()));
    }

    #[test]
    fn concrete_steps() {
        let sub = TransitionRelation::plain(RelationKind::Sub { y: 1, z: 0 });
        assert_eq!(sub.apply(&[2, 7]), Some(vec![2, 5]));
        assert_eq!(sub.apply(&[0, 7]), None);
        assert_eq!(sub.apply(&[8, 7]), None);
        let dec = TransitionRelation::plain(RelationKind::Dec(0));
        assert_eq!(dec.apply(&[0]), None);
        let erase = TransitionRelation::plain(RelationKind::EraseTest(0));
        assert_eq!(erase.apply(&[0, 3]), Some(vec![0, 3]));
        assert_eq!(erase.apply(&[1, 3]), None);

        let cs = ca("x y", "y z");
        let t = cs.out[0].iter().copied().find(|&t| cs.transitions[t].target == 0).unwrap();
        let at_root = Configuration { state: 0, values: vec![2, 7, 2] };
        assert_eq!(cs.step(&at_root, t).unwrap().unwrap().values, vec![2, 5, 2]);
        let elsewhere = Configuration { state: 1, values: vec![2, 7, 2] };
        assert!(matches!(cs.step(&elsewhere, t), Err(CounterError::WrongState { .. })));
    }

    #[test]
    fn flatness_examples() {
        let f = ca("x y", "y z").flatness();
        assert!(f.flat);
        assert_eq!(f.cycles.len(), 1);
        assert_eq!(f.cycles[0].len(), 1);
        assert!(!ca("x y", "y x").is_flat());
        assert!(ca("x a", "b y").is_flat());
    }

    #[test]
    fn cycle_shapes() {
        let sub = RelationKind::Sub { y: 1, z: 0 };
        assert_eq!(cycle_shape(&[sub]), Some(1));
        assert_eq!(cycle_shape(&[sub, RelationKind::Dec(1)]), Some(1));
        assert_eq!(cycle_shape(&[sub, RelationKind::Sub { y: 0, z: 1 }]), None);
        assert_eq!(cycle_shape(&[RelationKind::Id]), None);

        let cs = ca("x y", "y z");
        let f = cs.flatness();
        assert_eq!(cs.cycle_shape(&f.cycles[0]).unwrap(), Some(1));
        let not_closed = cs.out[0].iter().copied().find(|&t| cs.transitions[t].target != 0).unwrap();
        assert_eq!(cs.cycle_shape(&[not_closed]), Err(CounterError::NotACycle));
    }

    #[test]
    fn pre_star_examples() {
        let member = |cs: &CounterSystem, v: Vec<u64>| {
            let fin = cs.final_state().unwrap();
            pre_star_membership(cs, &[fin], &Configuration { state: 0, values: v }, 100_000).unwrap()
        };
        let cs = ca("x y", "y z");
        assert!(member(&cs, vec![2, 2, 2]));
        assert!(member(&cs, vec![1, 5, 1]));
        assert!(!member(&cs, vec![1, 5, 2]));
        let fin = cs.final_state().unwrap();
        let any = Configuration { state: fin, values: vec![4, 4, 4] };
        assert!(pre_star_membership(&cs, &[fin], &any, 10).unwrap());

        let cs = ca_hash("x y", "y z");
        assert!(!member(&cs, vec![2, 2, 3]));
        assert!(member(&cs, vec![2, 1, 2]));
        assert!(member(&cs, vec![2, 2, 2]));
        assert!(!member(&cs, vec![2, 2, 4]));
    }

    #[test]
    fn paths_replay_by_step() {
        let cs = ca("x y", "y z");
        let fin = cs.final_state().unwrap();
        let mut search = PreStar::new(&cs, &[fin], 100_000);
        let run = search.path(0, &[2, 6, 2]).unwrap().unwrap();
        let mut c = Configuration { state: 0, values: vec![2, 6, 2] };
        for (t, after) in run {
            c = cs.step(&c, t).unwrap().unwrap();
            assert_eq!(c.values, after);
        }
        assert_eq!(c.state, fin);
    }

    #[test]
    fn budget_is_reported() {
        let cs = ca("x y", "y z");
        let fin = cs.final_state().unwrap();
        let c = Configuration { state: 0, values: vec![1, 9, 2] };
        assert_eq!(pre_star_membership(&cs, &[fin], &c, 1), Err(CounterError::BudgetExceeded { cap: 1 }));
    }

    #[test]
    fn trimming_keeps_useful_part() {
        let cs = ca("a x", "b y");
        let fin = cs.final_state();
        assert!(fin.is_none());
        let (trimmed, _) = cs.trim(&[]);
        assert_eq!(trimmed.states.len(), 1);
        assert!(trimmed.transitions.is_empty());
    }

    proptest! {
        /// Every concrete step shrinks the counter vector, or keeps it and
        /// shrinks the equation.
        #[test]
        fn steps_make_progress(vals in prop::collection::vec(0u64..6, 3)) {
            for (l, r) in [("x y", "y z"), ("x y", "y x"), ("x a y", "y a x"), ("x a", "y b z")] {
                let cs = ca(l, r);
                let vals = &vals[..cs.counters.len()];
                for (i, t) in cs.transitions.iter().enumerate() {
                    let c = Configuration { state: t.source, values: vals.to_vec() };
                    if let Some(next) = cs.step(&c, i).unwrap() {
                        prop_assert!(next.values.iter().zip(vals).all(|(a, b)| a <= b));
                        if next.values == vals {
                            prop_assert!(
                                cs.states[t.target].equation.size() < cs.states[t.source].equation.size()
                            );
                        }
                    }
                }
            }
        }
    }
}
