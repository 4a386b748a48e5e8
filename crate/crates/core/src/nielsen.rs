//! Nielsen transformation for quadratic equations, with and without
//! regular constraints, and the finite graph of reachable rewrite states.
//!
//! In the prefix rules the leading variable keeps denoting the remaining
//! tail: for `x w1 = y w2` with `σ(y) = σ(x)σ(y')` the result is
//! `w1[xy/y] = y w2[xy/y]`. Under this reading the size of the equation
//! never grows and quadratic equations stay quadratic.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::automata::Nfa;
use crate::terms::{Assignment, Equation, Letter, Signature, Symbol, Var, Word};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NielsenError {
    #[error("equation is not quadratic")]
    NotQuadratic,
    #[error("rewrite graph exceeds the node cap of {cap}")]
    BudgetExceeded { cap: usize },
    #[error("assignment is inconsistent with the rule: {0}")]
    InconsistentGuess(String),
    #[error("rule {0:?} does not apply to this equation")]
    NotApplicable(RuleLabel),
    #[error("constraint {0:?} refers to a missing automaton or state")]
    BadConstraint(RegularConstraint),
    #[error("variable {0:?} is not assigned")]
    MissingVariable(Var),
}

/// `var ∈ L(A_{from,to})` where `A` is automaton number `nfa` of the
/// rewriter's table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegularConstraint {
    pub var: Var,
    pub nfa: usize,
    pub from: usize,
    pub to: usize,
}

impl RegularConstraint {
    pub fn new(var: Var, nfa: usize, from: usize, to: usize) -> Self {
        RegularConstraint { var, nfa, from, to }
    }
}

/// An equation together with a canonically ordered set of constraints.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RewriteState {
    pub equation: Equation,
    constraints: Vec<RegularConstraint>,
}

impl RewriteState {
    pub fn new(equation: Equation, constraints: impl IntoIterator<Item = RegularConstraint>) -> Self {
        let mut constraints: Vec<_> = constraints.into_iter().collect();
        constraints.sort_unstable();
        constraints.dedup();
        RewriteState { equation, constraints }
    }

    pub fn unconstrained(equation: Equation) -> Self {
        RewriteState { equation, constraints: Vec::new() }
    }

    /// `(ε = ε, ∅)`.
    pub fn is_final(&self) -> bool {
        self.equation.is_trivial() && self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[RegularConstraint] {
        &self.constraints
    }

    pub fn constraints_on(&self, v: Var) -> impl Iterator<Item = &RegularConstraint> {
        self.constraints.iter().filter(move |c| c.var == v)
    }

    /// Variables that carry at least one constraint.
    pub fn constrained_vars(&self) -> BTreeSet<Var> {
        self.constraints.iter().map(|c| c.var).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleLabel {
    EraseLhsVar(Var),
    EraseRhsVar(Var),
    P1,
    /// `a w1 = y w2` with `σ(y) = aσ(y')`.
    P2(Var),
    /// `x w1 = b w2` with `σ(x) = bσ(x')`.
    P3(Var),
    /// `x w1 = y w2` with `σ(y) = σ(x)σ(y')`.
    P4AlphaPrefix(Var, Var),
    /// `x w1 = y w2` with `σ(x) = σ(y)σ(x')`.
    P4BetaPrefix(Var, Var),
}

impl RuleLabel {
    pub fn name(&self) -> &'static str {
        match self {
            RuleLabel::EraseLhsVar(_) => "erase-lhs",
            RuleLabel::EraseRhsVar(_) => "erase-rhs",
            RuleLabel::P1 => "P1",
            RuleLabel::P2(_) => "P2",
            RuleLabel::P3(_) => "P3",
            RuleLabel::P4AlphaPrefix(..) => "P4-alpha",
            RuleLabel::P4BetaPrefix(..) => "P4-beta",
        }
    }

    pub fn describe(&self, sig: &Signature) -> String {
        let v = |x: &Var| sig.var_name(*x).to_string();
        match self {
            RuleLabel::EraseLhsVar(x) | RuleLabel::EraseRhsVar(x) => {
                format!("{}({})", self.name(), v(x))
            }
            RuleLabel::P1 => "P1".to_string(),
            RuleLabel::P2(y) | RuleLabel::P3(y) => format!("{}({})", self.name(), v(y)),
            RuleLabel::P4AlphaPrefix(x, y) | RuleLabel::P4BetaPrefix(x, y) => {
                format!("{}({},{})", self.name(), v(x), v(y))
            }
        }
    }
}

/// Label of a rewrite edge. `retired` holds the constraints of variables
/// that no longer occur after the step; they are still checked on the
/// step's post-values by the counter abstraction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub rule: RuleLabel,
    pub retired: Vec<RegularConstraint>,
}

/// Rewriting relative to a fixed table of automata.
#[derive(Clone, Debug, Default)]
pub struct Rewriter {
    pub automata: Vec<Nfa>,
}

/// The equation part of a rule application; `None` if the rule does not
/// apply.
pub fn rewrite_equation(eq: &Equation, rule: RuleLabel) -> Option<Equation> {
    let (l, r) = (&eq.lhs, &eq.rhs);
    let (hl, hr) = (l.head(), r.head());
    let prefixed = |v: Var, w: &Word, image: &[Symbol]| {
        Word::new(std::iter::once(Symbol::Var(v)).chain(w.substitute(v, image).iter()).collect())
    };
    match rule {
        RuleLabel::EraseLhsVar(x) if hl == Some(Symbol::Var(x)) => Some(Equation::new(l.erase(x), r.erase(x))),
        RuleLabel::EraseRhsVar(x) if hr == Some(Symbol::Var(x)) => Some(Equation::new(l.erase(x), r.erase(x))),
        RuleLabel::P1 if hl.is_some() && hl == hr => Some(Equation::new(l.tail(), r.tail())),
        RuleLabel::P2(y) => match (hl, hr) {
            (Some(Symbol::Const(a)), Some(Symbol::Var(v))) if v == y => {
                let image = [Symbol::Const(a), Symbol::Var(y)];
                Some(Equation::new(l.tail().substitute(y, &image), prefixed(y, &r.tail(), &image)))
            }
            _ => None,
        },
        RuleLabel::P3(x) => match (hl, hr) {
            (Some(Symbol::Var(v)), Some(Symbol::Const(b))) if v == x => {
                let image = [Symbol::Const(b), Symbol::Var(x)];
                Some(Equation::new(prefixed(x, &l.tail(), &image), r.tail().substitute(x, &image)))
            }
            _ => None,
        },
        RuleLabel::P4AlphaPrefix(x, y) | RuleLabel::P4BetaPrefix(x, y)
            if x != y && hl == Some(Symbol::Var(x)) && hr == Some(Symbol::Var(y)) =>
        {
            if matches!(rule, RuleLabel::P4AlphaPrefix(..)) {
                let image = [Symbol::Var(x), Symbol::Var(y)];
                Some(Equation::new(l.tail().substitute(y, &image), prefixed(y, &r.tail(), &image)))
            } else {
                let image = [Symbol::Var(y), Symbol::Var(x)];
                Some(Equation::new(prefixed(x, &l.tail(), &image), r.tail().substitute(x, &image)))
            }
        }
        _ => None,
    }
}

/// The rules whose shape matches the heads of `eq`.
pub fn applicable_rules(eq: &Equation) -> Vec<RuleLabel> {
    let mut rules = Vec::new();
    let (hl, hr) = (eq.lhs.head(), eq.rhs.head());
    if let Some(Symbol::Var(x)) = hl {
        rules.push(RuleLabel::EraseLhsVar(x));
    }
    if let Some(Symbol::Var(y)) = hr {
        if hl != hr {
            rules.push(RuleLabel::EraseRhsVar(y));
        }
    }
    match (hl, hr) {
        (Some(a), Some(b)) if a == b => rules.push(RuleLabel::P1),
        (Some(Symbol::Const(_)), Some(Symbol::Var(y))) => rules.push(RuleLabel::P2(y)),
        (Some(Symbol::Var(x)), Some(Symbol::Const(_))) => rules.push(RuleLabel::P3(x)),
        (Some(Symbol::Var(x)), Some(Symbol::Var(y))) => {
            rules.push(RuleLabel::P4AlphaPrefix(x, y));
            rules.push(RuleLabel::P4BetaPrefix(x, y));
        }
        _ => {}
    }
    rules
}

impl Rewriter {
    pub fn new(automata: Vec<Nfa>) -> Self {
        Rewriter { automata }
    }

    pub fn validate(&self, state: &RewriteState) -> Result<(), NielsenError> {
        for c in state.constraints() {
            let ok = self.automata.get(c.nfa).is_some_and(|a| c.from < a.num_states() && c.to < a.num_states());
            if !ok {
                return Err(NielsenError::BadConstraint(*c));
            }
        }
        Ok(())
    }

    pub fn accepts(&self, c: &RegularConstraint, w: &[Letter]) -> bool {
        self.automata[c.nfa].accepts_between(c.from, c.to, w)
    }

    /// Whether `sigma` satisfies every constraint of `state`.
    pub fn constraints_hold(&self, state: &RewriteState, sigma: &Assignment) -> bool {
        state.constraints().iter().all(|c| sigma.get(c.var).is_some_and(|w| self.accepts(c, w)))
    }

    /// All one-step successors, deduplicated.
    pub fn successors(&self, state: &RewriteState) -> Vec<(RewriteState, Edge)> {
        let mut out = Vec::new();
        for rule in applicable_rules(&state.equation) {
            let Some(eq) = rewrite_equation(&state.equation, rule) else { continue };
            for constraints in self.split_constraints(state, rule) {
                // A variable whose constraint languages do not intersect has
                // no image, so the successor is dead.
                if self.satisfiable(&constraints) {
                    out.push(finish(eq.clone(), constraints, rule));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Whether every variable has a word in all of its constraint languages.
    pub fn satisfiable(&self, constraints: &[RegularConstraint]) -> bool {
        let mut constraints = constraints.to_vec();
        constraints.sort_unstable();
        let mut i = 0;
        while i < constraints.len() {
            let v = constraints[i].var;
            let j = i + constraints[i..].iter().take_while(|c| c.var == v).count();
            if !self.intersect(&constraints[i..j]) {
                return false;
            }
            i = j;
        }
        true
    }

    /// Nonemptiness of `⋂ A_{from,to}` by search in the product automaton.
    fn intersect(&self, group: &[RegularConstraint]) -> bool {
        let start: Vec<usize> = group.iter().map(|c| c.from).collect();
        let goal: Vec<usize> = group.iter().map(|c| c.to).collect();
        let letters = group.iter().map(|c| self.automata[c.nfa].alphabet_size()).min().unwrap_or(0);
        let mut seen = HashSet::from([start.clone()]);
        let mut todo = vec![start];
        while let Some(t) = todo.pop() {
            if t == goal {
                return true;
            }
            for a in 0..letters {
                let a = Letter(a as u16);
                let mut nexts: Vec<Vec<usize>> = vec![Vec::new()];
                for (c, &p) in group.iter().zip(&t) {
                    let succ: Vec<usize> =
                        self.automata[c.nfa].successors(p).iter().filter(|&&(b, _)| b == a).map(|&(_, q)| q).collect();
                    nexts = nexts
                        .iter()
                        .flat_map(|pre| succ.iter().map(move |&q| [pre.as_slice(), &[q]].concat()))
                        .collect();
                }
                for n in nexts {
                    if seen.insert(n.clone()) {
                        todo.push(n);
                    }
                }
            }
        }
        false
    }

    /// The constraint sets after `rule`, one per combination of guessed
    /// midpoint states.
    fn split_constraints(&self, state: &RewriteState, rule: RuleLabel) -> Vec<Vec<RegularConstraint>> {
        let cons = state.constraints();
        let keep_others = |v: Var| cons.iter().filter(move |c| c.var != v).copied();
        match rule {
            RuleLabel::EraseLhsVar(x) | RuleLabel::EraseRhsVar(x) => {
                // ε ∈ L(A_{p,q}) iff p = q.
                if state.constraints_on(x).all(|c| c.from == c.to) {
                    vec![keep_others(x).collect()]
                } else {
                    vec![]
                }
            }
            RuleLabel::P1 => vec![cons.to_vec()],
            RuleLabel::P2(y) | RuleLabel::P3(y) => {
                let head = if matches!(rule, RuleLabel::P2(_)) {
                    state.equation.lhs.head()
                } else {
                    state.equation.rhs.head()
                };
                let Some(Symbol::Const(a)) = head else { return vec![] };
                let options: Vec<Vec<Vec<RegularConstraint>>> = state
                    .constraints_on(y)
                    .map(|c| {
                        self.automata[c.nfa]
                            .successors(c.from)
                            .iter()
                            .filter(|&&(b, _)| b == a)
                            .map(|&(_, r)| vec![RegularConstraint::new(y, c.nfa, r, c.to)])
                            .collect()
                    })
                    .collect();
                combine(keep_others(y).collect(), &options)
            }
            RuleLabel::P4AlphaPrefix(x, y) | RuleLabel::P4BetaPrefix(x, y) => {
                // `long` is decremented by `short`.
                let (short, long) = if matches!(rule, RuleLabel::P4AlphaPrefix(..)) { (x, y) } else { (y, x) };
                let options: Vec<Vec<Vec<RegularConstraint>>> = state
                    .constraints_on(long)
                    .map(|c| {
                        (0..self.automata[c.nfa].num_states())
                            .map(|r| {
                                vec![
                                    RegularConstraint::new(short, c.nfa, c.from, r),
                                    RegularConstraint::new(long, c.nfa, r, c.to),
                                ]
                            })
                            .collect()
                    })
                    .collect();
                combine(keep_others(long).collect(), &options)
            }
        }
    }

    /// Closure of `root` under [`Rewriter::successors`].
    pub fn build_graph(&self, root: RewriteState, cap: usize) -> Result<RewriteGraph, NielsenError> {
        if !root.equation.is_quadratic() {
            return Err(NielsenError::NotQuadratic);
        }
        self.validate(&root)?;
        let mut graph = RewriteGraph::default();
        graph.insert(root);
        let mut next = 0;
        while next < graph.nodes.len() {
            let source = next;
            next += 1;
            for (state, edge) in self.successors(&graph.nodes[source]) {
                let target = match graph.index.get(&state) {
                    Some(&t) => t,
                    None => {
                        if graph.nodes.len() >= cap {
                            return Err(NielsenError::BudgetExceeded { cap });
                        }
                        graph.insert(state)
                    }
                };
                graph.out[source].push(graph.edges.len());
                graph.edges.push(GraphEdge { source, target, edge });
            }
        }
        Ok(graph)
    }

    /// Whether `(ε = ε, ∅)` is reachable from `root`.
    pub fn is_solvable(&self, root: RewriteState, cap: usize) -> Result<bool, NielsenError> {
        Ok(self.build_graph(root, cap)?.final_node().is_some())
    }
}

fn finish(eq: Equation, constraints: Vec<RegularConstraint>, rule: RuleLabel) -> (RewriteState, Edge) {
    let vars = eq.variables();
    let (kept, mut retired): (Vec<_>, Vec<_>) = constraints.into_iter().partition(|c| vars.contains(&c.var));
    retired.sort_unstable();
    retired.dedup();
    (RewriteState::new(eq, kept), Edge { rule, retired })
}

fn combine(base: Vec<RegularConstraint>, options: &[Vec<Vec<RegularConstraint>>]) -> Vec<Vec<RegularConstraint>> {
    let mut out = vec![base];
    for choices in options {
        out = out
            .iter()
            .flat_map(|prefix| {
                choices.iter().map(move |c| {
                    let mut next = prefix.clone();
                    next.extend_from_slice(c);
                    next
                })
            })
            .collect();
    }
    out
}

/// Assignment after one rule application: prefixes are taken off the
/// decremented variable and variables that vanish are dropped.
pub fn annotated_step(state: &RewriteState, sigma: &Assignment, rule: RuleLabel) -> Result<Assignment, NielsenError> {
    let eq = &state.equation;
    let next = rewrite_equation(eq, rule).ok_or(NielsenError::NotApplicable(rule))?;
    let image = |v: Var| sigma.get(v).ok_or(NielsenError::MissingVariable(v));
    let mut out = sigma.clone();
    let mut strip = |v: Var, prefix: &[Letter], what: &str| -> Result<(), NielsenError> {
        let w = image(v)?;
        match w.strip_prefix(prefix) {
            Some(rest) => {
                out.insert(v, rest.to_vec());
                Ok(())
            }
            None => {
                Err(NielsenError::InconsistentGuess(format!("image of {v:?} does not start with the {what} prefix")))
            }
        }
    };
    match rule {
        RuleLabel::EraseLhsVar(x) | RuleLabel::EraseRhsVar(x) => {
            if !image(x)?.is_empty() {
                return Err(NielsenError::InconsistentGuess(format!("image of {x:?} is not empty")));
            }
        }
        RuleLabel::P1 => {}
        RuleLabel::P2(y) => {
            let a = eq.lhs.head().and_then(Symbol::as_const).ok_or(NielsenError::NotApplicable(rule))?;
            strip(y, &[a], "constant")?;
        }
        RuleLabel::P3(x) => {
            let b = eq.rhs.head().and_then(Symbol::as_const).ok_or(NielsenError::NotApplicable(rule))?;
            strip(x, &[b], "constant")?;
        }
        RuleLabel::P4AlphaPrefix(x, y) => {
            let px = image(x)?.to_vec();
            strip(y, &px, "variable")?;
        }
        RuleLabel::P4BetaPrefix(x, y) => {
            let py = image(y)?.to_vec();
            strip(x, &py, "variable")?;
        }
    }
    let vars = next.variables();
    out.retain(|v| vars.contains(&v));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    pub edge: Edge,
}

/// Reachable rewrite states; node 0 is the root.
#[derive(Clone, Debug, Default)]
pub struct RewriteGraph {
    pub nodes: Vec<RewriteState>,
    pub edges: Vec<GraphEdge>,
    /// Outgoing edge indices per node.
    pub out: Vec<Vec<usize>>,
    index: HashMap<RewriteState, usize>,
}

impl RewriteGraph {
    fn insert(&mut self, state: RewriteState) -> usize {
        let id = self.nodes.len();
        self.index.insert(state.clone(), id);
        self.nodes.push(state);
        self.out.push(Vec::new());
        id
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn find(&self, state: &RewriteState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Node id of `(ε = ε, ∅)` if reachable.
    pub fn final_node(&self) -> Option<usize> {
        self.find(&RewriteState::unconstrained(Equation::trivial()))
    }

    pub fn to_dot(&self, sig: &Signature) -> String {
        let mut s = String::from("digraph rewrite {\n  node [shape=box];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let mut label = sig.fmt_equation(&n.equation);
            for c in n.constraints() {
                let _ = write!(label, "\\n{} ∈ A{}[{},{}]", sig.var_name(c.var), c.nfa, c.from, c.to);
            }
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", dot_escape(&label));
        }
        for e in &self.edges {
            let _ =
                writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.source, e.target, dot_escape(&e.edge.rule.describe(sig)));
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn dot_escape(s: &str) -> String {
    s.replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig() -> Signature {
        Signature::new(&["a", "b", "#"], &["x", "y", "z"])
    }

    fn eq(l: &str, r: &str) -> Equation {
        sig().equation(l, r).unwrap()
    }

    const X: Var = Var(0);
    const Y: Var = Var(1);

    fn succ_eqs(e: &Equation) -> Vec<(RuleLabel, Equation)> {
        Rewriter::default()
            .successors(&RewriteState::unconstrained(e.clone()))
            .into_iter()
            .map(|(s, e)| (e.rule, s.equation))
            .collect()
    }

    #[test]
    fn prefix_rules_on_xy_yz() {
        let e = eq("x y", "y z");
        let succ = succ_eqs(&e);
        assert!(succ.contains(&(RuleLabel::P4AlphaPrefix(X, Y), e.clone())));
        assert!(succ.contains(&(RuleLabel::P4BetaPrefix(X, Y), eq("x y", "z"))));
        assert!(succ.contains(&(RuleLabel::EraseLhsVar(X), eq("y", "y z"))));
    }

    #[test]
    fn erasing_reaches_trivial() {
        let mut e = eq("x y", "y z");
        for v in [X, Y, Var(2)] {
            e = rewrite_equation(&e, RuleLabel::EraseLhsVar(v))
                .or_else(|| rewrite_equation(&e, RuleLabel::EraseRhsVar(v)))
                .unwrap();
        }
        assert!(e.is_trivial());
    }

    #[test]
    fn small_graphs() {
        let rw = Rewriter::default();
        let g = rw.build_graph(RewriteState::unconstrained(Equation::trivial()), 10).unwrap();
        assert_eq!((g.nodes.len(), g.edges.len()), (1, 0));
        let g = rw.build_graph(RewriteState::unconstrained(eq("a", "b")), 10).unwrap();
        assert_eq!((g.nodes.len(), g.edges.len()), (1, 0));
        let g = rw.build_graph(RewriteState::unconstrained(eq("x y", "y z")), 100).unwrap();
        assert!(g.final_node().is_some());
        assert!(g.edges.iter().any(|e| e.source == 0 && e.target == 0));
    }

    #[test]
    fn solvability() {
        let rw = Rewriter::default();
        let solvable = |l, r| rw.is_solvable(RewriteState::unconstrained(eq(l, r)), 1000).unwrap();
        assert!(solvable("", ""));
        assert!(!solvable("a", "b"));
        assert!(solvable("x y", "y x"));
        assert!(!solvable("a x", "x b"));
        assert_eq!(rw.is_solvable(RewriteState::unconstrained(eq("x x x", "y")), 10), Err(NielsenError::NotQuadratic));
    }

    #[test]
    fn node_cap_is_enforced() {
        let rw = Rewriter::default();
        let root = RewriteState::unconstrained(eq("x a y", "y b x"));
        assert_eq!(rw.build_graph(root, 2).unwrap_err(), NielsenError::BudgetExceeded { cap: 2 });
    }

    #[test]
    fn annotated_prefix_removal() {
        let s = sig();
        let state = RewriteState::unconstrained(eq("x y", "y x"));
        let sigma: Assignment = [(X, s.text("ab").unwrap()), (Y, s.text("abaaab").unwrap())].into_iter().collect();
        let next = annotated_step(&state, &sigma, RuleLabel::P4AlphaPrefix(X, Y)).unwrap();
        assert_eq!(next.get(Y).unwrap(), s.text("aaab").unwrap().as_slice());
        assert_eq!(next.get(X).unwrap(), s.text("ab").unwrap().as_slice());
        assert!(matches!(
            annotated_step(&state, &sigma, RuleLabel::P4BetaPrefix(X, Y)),
            Err(NielsenError::InconsistentGuess(_))
        ));
    }

    #[test]
    fn annotated_erase_and_constant() {
        let s = sig();
        let state = RewriteState::unconstrained(eq("x y", "y x"));
        let sigma: Assignment = [(X, vec![]), (Y, s.text("ab").unwrap())].into_iter().collect();
        let next = annotated_step(&state, &sigma, RuleLabel::EraseLhsVar(X)).unwrap();
        assert_eq!(next.domain().collect::<Vec<_>>(), vec![Y]);

        let state = RewriteState::unconstrained(eq("a x", "y"));
        let sigma: Assignment = [(X, vec![]), (Y, s.text("ab").unwrap())].into_iter().collect();
        let next = annotated_step(&state, &sigma, RuleLabel::P2(Y)).unwrap();
        assert_eq!(next.get(Y).unwrap(), s.text("b").unwrap().as_slice());
    }

    /// `#(a+b)*` over {a, b, #}.
    fn hash_ab() -> Nfa {
        Nfa::from_transitions(3, 2, [(0, Letter(2), 1), (1, Letter(0), 1), (1, Letter(1), 1)], 0, 1).unwrap()
    }

    #[test]
    fn constrained_erase_requires_epsilon() {
        let rw = Rewriter::new(vec![hash_ab()]);
        let state = RewriteState::new(eq("x y", "y z"), [RegularConstraint::new(X, 0, 0, 1)]);
        let rules: Vec<_> = rw.successors(&state).into_iter().map(|(_, e)| e.rule).collect();
        assert!(!rules.contains(&RuleLabel::EraseLhsVar(X)));
        assert!(rules.contains(&RuleLabel::EraseRhsVar(Y)));
    }

    #[test]
    fn constrained_constant_prefix_advances_state() {
        let rw = Rewriter::new(vec![hash_ab()]);
        let state = RewriteState::new(eq("# x", "y"), [RegularConstraint::new(Y, 0, 0, 1)]);
        let succ = rw.successors(&state);
        let p2: Vec<_> = succ.iter().filter(|(_, e)| e.rule == RuleLabel::P2(Y)).collect();
        assert_eq!(p2.len(), 1);
        assert_eq!(p2[0].0.constraints(), &[RegularConstraint::new(Y, 0, 1, 1)]);

        let state = RewriteState::new(eq("a x", "y"), [RegularConstraint::new(Y, 0, 0, 1)]);
        assert!(rw.successors(&state).iter().all(|(_, e)| e.rule != RuleLabel::P2(Y)));
    }

    #[test]
    fn constrained_split_guesses_every_midpoint() {
        let rw = Rewriter::new(vec![hash_ab()]);
        let state = RewriteState::new(eq("x y", "y z"), [RegularConstraint::new(Y, 0, 0, 1)]);
        let alpha: Vec<_> =
            rw.successors(&state).into_iter().filter(|(_, e)| e.rule == RuleLabel::P4AlphaPrefix(X, Y)).collect();
        assert_eq!(alpha.len(), 2);
        for (s, _) in &alpha {
            assert_eq!(s.constraints_on(X).count(), 1);
            assert_eq!(s.constraints_on(Y).count(), 1);
        }
    }

    #[test]
    fn vanishing_variables_retire_their_constraints() {
        let rw = Rewriter::new(vec![hash_ab()]);
        // x = y z: taking σ(y) = σ(x)σ(y') leaves ε = y z with x gone.
        let state =
            RewriteState::new(eq("x", "y z"), [RegularConstraint::new(X, 0, 0, 1), RegularConstraint::new(Y, 0, 0, 1)]);
        let succ = rw.successors(&state);
        let (s, e) = succ.iter().find(|(_, e)| e.rule == RuleLabel::P4AlphaPrefix(X, Y)).unwrap();
        assert!(!s.constrained_vars().contains(&X));
        assert!(e.retired.iter().all(|c| c.var == X));
        assert!(!e.retired.is_empty());
    }

    #[test]
    fn dot_export_lists_edges() {
        let g = Rewriter::default().build_graph(RewriteState::unconstrained(eq("x y", "y z")), 100).unwrap();
        let dot = g.to_dot(&sig());
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), g.edges.len());
    }

    fn arb_quadratic() -> impl Strategy<Value = Equation> {
        // Each of three variables at most twice, two letters.
        let sym =
            prop_oneof![(0u16..2).prop_map(|a| Symbol::Const(Letter(a))), (0u16..3).prop_map(|v| Symbol::Var(Var(v))),];
        prop::collection::vec((sym, any::<bool>()), 0..7).prop_map(|syms| {
            let mut counts = [0; 3];
            let (mut l, mut r) = (Vec::new(), Vec::new());
            for (s, left) in syms {
                if let Symbol::Var(v) = s {
                    if counts[v.index()] == 2 {
                        continue;
                    }
                    counts[v.index()] += 1;
                }
                if left {
                    l.push(s)
                } else {
                    r.push(s)
                }
            }
            Equation::new(Word::new(l), Word::new(r))
        })
    }

    proptest! {
        #[test]
        fn successors_stay_quadratic_and_do_not_grow(e in arb_quadratic()) {
            for (rule, next) in succ_eqs(&e) {
                prop_assert!(next.is_quadratic(), "{:?} on {}", rule, e);
                prop_assert!(next.size() <= e.size());
            }
        }

        #[test]
        fn p4_keeps_variable_occurrences(e in arb_quadratic()) {
            for (rule, next) in succ_eqs(&e) {
                if let RuleLabel::P4AlphaPrefix(_, y) | RuleLabel::P4BetaPrefix(y, _) = rule {
                    prop_assert_eq!(next.occurrences(y), e.occurrences(y));
                }
            }
        }
    }
}
