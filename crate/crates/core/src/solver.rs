//! End-to-end decision procedure.
//!
//! Flat systems whose cycles are all 1-variable-reducing are decided
//! symbolically: `∃post. λ_{root,final}(|x̄|, post) ∧ Φ`. Everything else
//! falls back to enumerating models of `Φ` and adjudicating each length
//! vector with the exact pre* search, which settles bounded `Φ`.
//!
//! Constrained variables that do not occur in the equation only need a word
//! in their own constraint languages, so they are handled through the length
//! sets of those languages instead of entering the counter system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::accel::{flat_reachability, AccelError};
use crate::automata::{AutomataError, Nfa, UnarySemilinear};
use crate::counter::{relation_kind, CounterError, CounterSystem, PreStar, RelationKind, DEFAULT_SEARCH_CAP};
use crate::nielsen::{NielsenError, RegularConstraint, RewriteState, DEFAULT_NODE_CAP};
use crate::pad::{
    enumerate_models, is_satisfiable, lower_unary_membership, LinearTerm, PadFormula, PadVar, SatResult, Valuation,
    VarPool,
};
use crate::problem::{length_var, Problem};
use crate::terms::{Assignment, LengthVector, Letter, Symbol, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("equation is not quadratic")]
    NotQuadratic,
    #[error(transparent)]
    Counter(#[from] CounterError),
    #[error(transparent)]
    Accel(#[from] AccelError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error("length vector is not in the length abstraction")]
    NotMember,
    #[error("length vector has no entry for variable {0:?}")]
    MissingLength(Var),
    #[error("witness reconstruction failed: {0}")]
    WitnessFailed(String),
}

impl From<NielsenError> for SolverError {
    fn from(e: NielsenError) -> Self {
        match e {
            NielsenError::NotQuadratic => SolverError::NotQuadratic,
            e => SolverError::Counter(CounterError::Nielsen(e)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    NotFlat,
    BadCycle,
    SolverBound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat { lengths: LengthVector, witness: Option<Assignment> },
    Unsat,
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassReport {
    pub quadratic: bool,
    pub regular: bool,
    pub oriented: bool,
    /// Every constraint automaton is 1-weak (vacuous without constraints).
    pub one_weak_constraints: bool,
    /// `None` when the equation is not quadratic.
    pub flat: Option<bool>,
    pub cycles_one_var_reducing: Option<bool>,
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |b: Option<bool>| b.map_or("n/a".to_string(), |b| b.to_string());
        write!(
            f,
            "quadratic={} regular={} oriented={} one_weak_constraints={} flat={} cycles_one_var_reducing={}",
            self.quadratic,
            self.regular,
            self.oriented,
            self.one_weak_constraints,
            opt(self.flat),
            opt(self.cycles_one_var_reducing)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverOptions {
    /// Rewrite-graph node budget.
    pub node_cap: usize,
    /// Memo budget of each pre* search.
    pub search_cap: usize,
    /// Most length-constraint models tried by the fallback.
    pub model_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { node_cap: DEFAULT_NODE_CAP, search_cap: DEFAULT_SEARCH_CAP, model_limit: 20_000 }
    }
}

/// Per-problem state: the counter system and the side variables.
pub struct Solver<'p> {
    problem: &'p Problem,
    options: SolverOptions,
    cs: CounterSystem,
    final_state: Option<usize>,
    /// Constrained variables outside the equation, with the intersection of
    /// their constraint languages.
    side: BTreeMap<Var, Nfa>,
}

fn slices(p: &Problem, cs: &[&RegularConstraint]) -> Result<Option<Nfa>, SolverError> {
    if cs.is_empty() {
        return Ok(None);
    }
    let parts: Vec<Nfa> = cs.iter().map(|c| p.automata[c.nfa].nfa.slice(c.from, c.to)).collect::<Result<_, _>>()?;
    Ok(Some(Nfa::intersection(&parts.iter().collect::<Vec<_>>())?))
}

fn any_word(p: &Problem, n: u64) -> Option<Vec<Letter>> {
    (!p.signature.letters.is_empty() || n == 0).then(|| vec![Letter(0); n as usize])
}

impl<'p> Solver<'p> {
    pub fn new(problem: &'p Problem) -> Result<Self, SolverError> {
        Self::with_options(problem, SolverOptions::default())
    }

    pub fn with_options(problem: &'p Problem, options: SolverOptions) -> Result<Self, SolverError> {
        if !problem.equation.is_quadratic() {
            return Err(SolverError::NotQuadratic);
        }
        let in_eq = problem.equation.variables();
        let mut side = BTreeMap::new();
        let outside: BTreeSet<Var> = problem.constraints.iter().map(|c| c.var).filter(|v| !in_eq.contains(v)).collect();
        for v in outside {
            let cs: Vec<&RegularConstraint> = problem.constraints.iter().filter(|c| c.var == v).collect();
            side.insert(v, slices(problem, &cs)?.expect("constrained"));
        }
        let root = RewriteState::new(
            problem.equation.clone(),
            problem.constraints.iter().filter(|c| in_eq.contains(&c.var)).cloned(),
        );
        let cs = CounterSystem::build_with_constraints(&problem.rewriter(), root, options.node_cap)?;
        let final_state = cs.final_state();
        Ok(Solver { problem, options, cs, final_state, side })
    }

    pub fn counter_system(&self) -> &CounterSystem {
        &self.cs
    }

    pub fn classify(&self) -> ClassReport {
        let mut r = classify_syntax(self.problem);
        let flatness = self.cs.flatness();
        r.flat = Some(flatness.flat);
        r.cycles_one_var_reducing = Some(flatness.cycles.iter().all(|c| matches!(self.cs.cycle_shape(c), Ok(Some(_)))));
        r
    }

    fn counter_values(&self, v: &LengthVector) -> Result<Vec<u64>, SolverError> {
        self.cs.counters.iter().map(|&x| v.get(x).ok_or(SolverError::MissingLength(x))).collect()
    }

    fn side_ok(&self, v: &LengthVector) -> Result<bool, SolverError> {
        for (&x, nfa) in &self.side {
            let n = v.get(x).ok_or(SolverError::MissingLength(x))?;
            if nfa.word_of_length(n as usize).is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact membership of `v` in the length abstraction.
    pub fn length_membership(&self, v: &LengthVector) -> Result<bool, SolverError> {
        self.membership().check(v)
    }

    /// A reusable membership checker that shares its pre* memo.
    pub fn membership(&self) -> Membership<'_, 'p> {
        let targets: Vec<usize> = self.final_state.into_iter().collect();
        Membership { solver: self, search: PreStar::new(&self.cs, &targets, self.options.search_cap) }
    }

    /// `λ_{root,final}` over `|x̄|` and fresh post-state variables, with the
    /// variable pool naming them.
    pub fn reachability_formula(&self) -> Result<(VarPool, PadFormula), SolverError> {
        let mut pool = VarPool::new();
        for name in &self.problem.signature.vars {
            pool.fresh(format!("|{name}|"));
        }
        let Some(fin) = self.final_state else {
            return Ok((pool, PadFormula::ff()));
        };
        let (trimmed, map) = self.cs.trim(&[fin]);
        let pre: Vec<PadVar> = self.cs.counters.iter().map(|&x| length_var(x)).collect();
        let post: Vec<PadVar> =
            self.cs.counters.iter().map(|&x| pool.fresh(format!("{}'", self.problem.signature.var_name(x)))).collect();
        let fin = map[fin].expect("final state is useful");
        let lambda = flat_reachability(&trimmed, trimmed.root(), fin, &pre, &post, &mut pool)?;
        Ok((pool, PadFormula::exists(post, lambda)))
    }

    /// `Φ` plus the length sets of the side variables.
    fn side_constraint(&self) -> PadFormula {
        let mut parts = vec![self.problem.length_constraint.clone()];
        for (&x, nfa) in &self.side {
            let u: UnarySemilinear = nfa.length_abstraction();
            parts.push(lower_unary_membership(&LinearTerm::var(length_var(x)), &u));
        }
        PadFormula::and(parts)
    }

    /// Variables whose lengths a verdict reports.
    fn reported_vars(&self) -> BTreeSet<Var> {
        let mut vs = self.problem.variables();
        let declared = self.problem.signature.vars.len();
        vs.extend(
            self.problem
                .length_constraint
                .free_vars()
                .into_iter()
                .filter(|v| v.index() < declared)
                .map(|v| Var(v.0 as u16)),
        );
        vs
    }

    fn lengths_from(&self, val: &Valuation) -> LengthVector {
        LengthVector(self.reported_vars().into_iter().map(|x| (x, val.get(length_var(x)).unwrap_or(0))).collect())
    }

    fn sat(&self, lengths: LengthVector) -> Verdict {
        let witness = self.synthesize_witness(&lengths).ok();
        Verdict::Sat { lengths, witness }
    }

    pub fn solve(&self) -> Result<Verdict, SolverError> {
        let Some(fin) = self.final_state else {
            return Ok(Verdict::Unsat);
        };
        let (trimmed, _) = self.cs.trim(&[fin]);
        let flatness = trimmed.flatness();
        let reason = if !flatness.flat {
            Some(UnknownReason::NotFlat)
        } else if !flatness.cycles.iter().all(|c| matches!(trimmed.cycle_shape(c), Ok(Some(_)))) {
            Some(UnknownReason::BadCycle)
        } else {
            None
        };
        let side = self.side_constraint();
        let mut membership = self.membership();
        if reason.is_none() {
            let (_, lambda) = self.reachability_formula()?;
            match is_satisfiable(&PadFormula::and([lambda, side.clone()])) {
                SatResult::Sat(val) => {
                    let lengths = self.lengths_from(&val);
                    // Independent re-check before answering.
                    if membership.check(&lengths)? {
                        return Ok(self.sat(lengths));
                    }
                }
                SatResult::Unsat => return Ok(Verdict::Unsat),
                SatResult::Unknown(_) => {}
            }
        }
        let project: Vec<PadVar> = self.reported_vars().into_iter().map(length_var).collect();
        let models = enumerate_models(&side, &project, self.options.model_limit);
        for m in &models.models {
            let lengths = LengthVector(self.reported_vars().into_iter().zip(m.iter().copied()).collect());
            match membership.check(&lengths) {
                Ok(true) => return Ok(self.sat(lengths)),
                Ok(false) => {}
                Err(SolverError::Counter(CounterError::BudgetExceeded { .. })) => {
                    return Ok(Verdict::Unknown(reason.unwrap_or(UnknownReason::SolverBound)))
                }
                Err(e) => return Err(e),
            }
        }
        if models.complete {
            return Ok(Verdict::Unsat);
        }
        Ok(Verdict::Unknown(reason.unwrap_or(UnknownReason::SolverBound)))
    }

    /// A solution whose lengths are `v`, rebuilt by replaying an accepting
    /// run of the counter system backwards.
    pub fn synthesize_witness(&self, v: &LengthVector) -> Result<Assignment, SolverError> {
        let mut membership = self.membership();
        if !membership.check(v)? {
            return Err(SolverError::NotMember);
        }
        let start = self.counter_values(v)?;
        let run = membership.search.path(self.cs.root(), &start)?.ok_or(SolverError::NotMember)?;
        let mut before = vec![start];
        before.extend(run.iter().map(|(_, vals)| vals.clone()));

        let rewriter = self.problem.rewriter();
        let position = |x: Var| self.cs.counter_of(x).expect("counter");
        let mut sigma = Assignment::new();
        for (i, &(t, _)) in run.iter().enumerate().rev() {
            let tr = &self.cs.transitions[t];
            let (src, dst) = (&self.cs.states[tr.source], &self.cs.states[tr.target]);
            let vals = &before[i];
            let edges: Vec<_> = rewriter
                .successors(src)
                .into_iter()
                .filter(|(s, e)| s == dst && relation_kind(e.rule, position) == tr.relation.kind)
                .map(|(_, e)| e)
                .collect();
            let mut rebuilt = None;
            for edge in &edges {
                if let Some(s) = self.undo_step(src, dst, &edge.retired, &tr.relation.kind, vals, &sigma)? {
                    rebuilt = Some(s);
                    break;
                }
            }
            sigma = rebuilt.ok_or_else(|| SolverError::WitnessFailed(format!("no edge replays step {i}")))?;
        }
        for (&x, nfa) in &self.side {
            let n = v.get(x).ok_or(SolverError::MissingLength(x))?;
            let w = nfa.word_of_length(n as usize).ok_or(SolverError::NotMember)?;
            sigma.insert(x, w);
        }
        for (x, n) in v.0.iter() {
            if sigma.get(*x).is_none() {
                let w = any_word(self.problem, *n).ok_or(SolverError::NotMember)?;
                sigma.insert(*x, w);
            }
        }
        self.verify(&sigma, v)?;
        Ok(sigma)
    }

    /// The assignment before one step, given the one after it.
    fn undo_step(
        &self,
        src: &RewriteState,
        dst: &RewriteState,
        retired: &[RegularConstraint],
        kind: &RelationKind,
        vals: &[u64],
        after: &Assignment,
    ) -> Result<Option<Assignment>, SolverError> {
        let counter = |c: usize| self.cs.counters[c];
        let len = |x: Var| vals[self.cs.counter_of(x).expect("counter")];
        let kept = dst.equation.variables();
        let mut out = Assignment::new();
        let fresh = |x: Var| -> Result<Option<Vec<Letter>>, SolverError> {
            let cs: Vec<&RegularConstraint> =
                src.constraints_on(x).chain(retired.iter().filter(|c| c.var == x)).collect();
            Ok(match slices(self.problem, &cs)? {
                Some(nfa) => nfa.word_of_length(len(x) as usize),
                None => any_word(self.problem, len(x)),
            })
        };
        for x in src.equation.variables() {
            if kept.contains(&x) {
                let w = after.get(x).ok_or(SolverError::WitnessFailed(format!("{x:?} unassigned")))?;
                out.insert(x, w.to_vec());
            }
        }
        match *kind {
            RelationKind::EraseTest(c) => {
                out.insert(counter(c), Vec::new());
            }
            RelationKind::Dec(c) => {
                let y = counter(c);
                let eq = &src.equation;
                let a = match (eq.lhs.head(), eq.rhs.head()) {
                    (Some(Symbol::Const(a)), _) | (_, Some(Symbol::Const(a))) => a,
                    _ => return Err(SolverError::WitnessFailed("decrement without a constant head".into())),
                };
                let mut w = vec![a];
                w.extend_from_slice(after.get(y).unwrap_or(&[]));
                out.insert(y, w);
            }
            RelationKind::Sub { y, z } => {
                let (y, z) = (counter(y), counter(z));
                let prefix = match after.get(z) {
                    Some(w) if kept.contains(&z) => w.to_vec(),
                    _ => match fresh(z)? {
                        Some(w) => w,
                        None => return Ok(None),
                    },
                };
                let mut w = prefix.clone();
                w.extend_from_slice(after.get(y).unwrap_or(&[]));
                out.insert(y, w);
                out.insert(z, prefix);
            }
            RelationKind::Id => {}
        }
        for x in src.equation.variables() {
            if out.get(x).is_none() {
                match fresh(x)? {
                    Some(w) => {
                        out.insert(x, w);
                    }
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(out))
    }

    fn verify(&self, sigma: &Assignment, v: &LengthVector) -> Result<(), SolverError> {
        let fail = |m: &str| Err(SolverError::WitnessFailed(m.to_string()));
        if !sigma.check_solution(&self.problem.equation).unwrap_or(false) {
            return fail("not a solution");
        }
        let rw = self.problem.rewriter();
        for c in &self.problem.constraints {
            if !sigma.get(c.var).is_some_and(|w| rw.accepts(c, w)) {
                return fail("regular constraint violated");
            }
        }
        for (x, n) in v.0.iter() {
            if sigma.get(*x).map(|w| w.len() as u64) != Some(*n) {
                return fail("length mismatch");
            }
        }
        Ok(())
    }
}

/// Repeated membership queries against one pre* memo.
pub struct Membership<'s, 'p> {
    solver: &'s Solver<'p>,
    search: PreStar<'s>,
}

impl Membership<'_, '_> {
    pub fn check(&mut self, v: &LengthVector) -> Result<bool, SolverError> {
        let s = self.solver;
        if s.final_state.is_none() || !s.side_ok(v)? {
            return Ok(false);
        }
        let values = s.counter_values(v)?;
        Ok(self.search.reaches(s.cs.root(), &values)?)
    }
}

fn classify_syntax(p: &Problem) -> ClassReport {
    let e = &p.equation;
    let used: BTreeSet<usize> = p.constraints.iter().map(|c| c.nfa).collect();
    ClassReport {
        quadratic: e.is_quadratic(),
        regular: e.is_regular(),
        oriented: e.is_oriented(),
        one_weak_constraints: used.iter().all(|&i| p.automata[i].nfa.is_one_weak()),
        flat: None,
        cycles_one_var_reducing: None,
    }
}

/// Syntactic class plus, for quadratic equations, flatness of the counter
/// system.
pub fn classify(p: &Problem) -> ClassReport {
    match Solver::new(p) {
        Ok(s) => s.classify(),
        Err(_) => classify_syntax(p),
    }
}

pub fn solve(p: &Problem) -> Result<Verdict, SolverError> {
    Solver::new(p)?.solve()
}

pub fn length_membership(p: &Problem, v: &LengthVector) -> Result<bool, SolverError> {
    Solver::new(p)?.length_membership(v)
}

pub fn synthesize_witness(p: &Problem, v: &LengthVector) -> Result<Assignment, SolverError> {
    Solver::new(p)?.synthesize_witness(v)
}
