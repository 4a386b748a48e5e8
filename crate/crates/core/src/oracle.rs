//! Brute-force ground truth.
//!
//! For a fixed length vector both sides unfold to position sequences of the
//! same length. Positions forced equal are merged with union-find; a class
//! holding two different letters kills the vector. Without constraints any
//! consistent vector is a length of a solution. With constraints the free
//! classes get letters by backtracking, pruned by the constraint automata.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::automata::Nfa;
use crate::pad::{LinearTerm, PadFormula, PadVar};
use crate::problem::Problem;
use crate::terms::{Assignment, LengthVector, Letter, Symbol, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search budget of {cap} steps exceeded")]
    BudgetExceeded { cap: u64 },
    #[error("unknown reference formula `{0}`")]
    UnknownName(String),
    #[error("length vector does not cover variable {0:?}")]
    MissingLength(Var),
}

pub const DEFAULT_ORACLE_CAP: u64 = 50_000_000;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// Exact search for one length vector.
pub struct Oracle<'p> {
    problem: &'p Problem,
    vars: Vec<Var>,
    cap: u64,
}

impl<'p> Oracle<'p> {
    pub fn new(problem: &'p Problem) -> Self {
        Oracle { problem, vars: problem.variables().into_iter().collect(), cap: DEFAULT_ORACLE_CAP }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    /// The variables a length vector must cover, ascending.
    pub fn variables(&self) -> &[Var] {
        &self.vars
    }

    /// A solution with exactly the given lengths, if one exists.
    pub fn find_solution(&self, lengths: &LengthVector) -> Result<Option<Assignment>, OracleError> {
        let mut offset = Vec::with_capacity(self.vars.len());
        let mut total = 0usize;
        for &v in &self.vars {
            let n = lengths.get(v).ok_or(OracleError::MissingLength(v))? as usize;
            offset.push((total, n));
            total += n;
        }
        let slot = |v: Var| offset[self.vars.binary_search(&v).expect("problem variable")];
        // Position layout: variable cells first, then one cell per letter.
        let letters = self.problem.signature.letters.len();
        let letter_cell = |a: Letter| total + a.0 as usize;
        let unfold = |w: &crate::terms::Word| -> Vec<usize> {
            let mut out = Vec::new();
            for s in w.iter() {
                match s {
                    Symbol::Const(a) => out.push(letter_cell(a)),
                    Symbol::Var(v) => {
                        let (start, n) = slot(v);
                        out.extend(start..start + n);
                    }
                }
            }
            out
        };
        let (l, r) = (unfold(&self.problem.equation.lhs), unfold(&self.problem.equation.rhs));
        if l.len() != r.len() {
            return Ok(None);
        }
        let mut uf = UnionFind::new(total + letters);
        for (a, b) in l.into_iter().zip(r) {
            uf.union(a, b);
        }
        // Letter forced on each class, if any.
        let mut forced: Vec<Option<Letter>> = vec![None; total + letters];
        for a in 0..letters {
            let a = Letter(a as u16);
            let root = uf.find(letter_cell(a));
            match forced[root] {
                Some(b) if b != a => return Ok(None),
                _ => forced[root] = Some(a),
            }
        }
        let class: Vec<usize> = (0..total).map(|i| uf.find(i)).collect();

        let mut search = Search {
            problem: self.problem,
            vars: &self.vars,
            offset: &offset,
            class: &class,
            forced,
            cells: vec![Letter(0); total],
            steps: 0,
            cap: self.cap,
            alive: Vec::new(),
        };
        search.prepare();
        if !search.run(0)? {
            return Ok(None);
        }
        Ok(Some(
            self.vars
                .iter()
                .zip(&offset)
                .map(|(&v, &(start, n))| (v, search.cells[start..start + n].to_vec()))
                .collect(),
        ))
    }

    pub fn membership(&self, lengths: &LengthVector) -> Result<bool, OracleError> {
        Ok(self.find_solution(lengths)?.is_some())
    }
}

struct Search<'a> {
    problem: &'a Problem,
    vars: &'a [Var],
    offset: &'a [(usize, usize)],
    class: &'a [usize],
    forced: Vec<Option<Letter>>,
    cells: Vec<Letter>,
    steps: u64,
    cap: u64,
    /// Per constraint: `alive[k][n]` = states that reach the target in
    /// exactly `n` more letters.
    alive: Vec<Vec<Vec<bool>>>,
}

impl Search<'_> {
    fn nfa(&self, k: usize) -> &Nfa {
        &self.problem.automata[self.problem.constraints[k].nfa].nfa
    }

    fn prepare(&mut self) {
        for k in 0..self.problem.constraints.len() {
            let c = &self.problem.constraints[k];
            let n = self.offset[self.vars.binary_search(&c.var).expect("constrained variable")].1;
            let nfa = self.nfa(k);
            let mut layers = vec![vec![false; nfa.num_states()]];
            layers[0][c.to] = true;
            for i in 1..=n {
                let prev = &layers[i - 1];
                let layer: Vec<bool> =
                    (0..nfa.num_states()).map(|p| nfa.successors(p).iter().any(|&(_, q)| prev[q])).collect();
                layers.push(layer);
            }
            self.alive.push(layers);
        }
    }

    /// Assigns the variables from index `i` on.
    fn run(&mut self, i: usize) -> Result<bool, OracleError> {
        if i == self.vars.len() {
            return Ok(true);
        }
        let v = self.vars[i];
        let ks: Vec<usize> =
            (0..self.problem.constraints.len()).filter(|&k| self.problem.constraints[k].var == v).collect();
        let starts: Vec<Vec<bool>> = ks
            .iter()
            .map(|&k| {
                let mut s = vec![false; self.nfa(k).num_states()];
                s[self.problem.constraints[k].from] = true;
                s
            })
            .collect();
        self.cell(i, 0, &ks, starts)
    }

    fn cell(&mut self, i: usize, j: usize, ks: &[usize], sets: Vec<Vec<bool>>) -> Result<bool, OracleError> {
        let (start, n) = self.offset[i];
        for (idx, &k) in ks.iter().enumerate() {
            let live = &self.alive[k][n - j];
            if !sets[idx].iter().zip(live).any(|(&a, &b)| a && b) {
                return Ok(false);
            }
        }
        if j == n {
            return self.run(i + 1);
        }
        self.steps += 1;
        if self.steps > self.cap {
            return Err(OracleError::BudgetExceeded { cap: self.cap });
        }
        let root = self.class[start + j];
        let choices: Vec<Letter> = match self.forced[root] {
            Some(a) => vec![a],
            None => (0..self.problem.signature.letters.len() as u16).map(Letter).collect(),
        };
        let fresh = self.forced[root].is_none();
        for a in choices {
            let next: Vec<Vec<bool>> = ks
                .iter()
                .zip(&sets)
                .map(|(&k, set)| {
                    let nfa = self.nfa(k);
                    let mut out = vec![false; nfa.num_states()];
                    for p in (0..set.len()).filter(|&p| set[p]) {
                        for &(b, q) in nfa.successors(p) {
                            if b == a {
                                out[q] = true;
                            }
                        }
                    }
                    out
                })
                .collect();
            if fresh {
                self.forced[root] = Some(a);
            }
            self.cells[start + j] = a;
            let ok = self.cell(i, j + 1, ks, next)?;
            if fresh {
                self.forced[root] = None;
            }
            if ok {
                if fresh {
                    // Keep the choice so the returned cells stay consistent.
                    self.forced[root] = Some(a);
                }
                return Ok(true);
            }
            // Without constraints every letter behaves the same.
            if ks.is_empty() && fresh && !self.class_is_constrained(root) {
                return Ok(false);
            }
        }
        Ok(false)
    }

    fn class_is_constrained(&self, root: usize) -> bool {
        self.problem.constraints.iter().any(|c| {
            let (start, n) = self.offset[self.vars.binary_search(&c.var).expect("constrained variable")];
            (start..start + n).any(|p| self.class[p] == root)
        })
    }
}

/// Every length vector in `[0, max_len]^V` that is the length vector of a
/// solution, with `V` the problem's variables.
pub fn enumerate_solutions(p: &Problem, max_len: u64) -> Result<BTreeSet<LengthVector>, OracleError> {
    let oracle = Oracle::new(p);
    let vars = oracle.variables().to_vec();
    let mut out = BTreeSet::new();
    let mut values = vec![0u64; vars.len()];
    loop {
        let lv = LengthVector(vars.iter().copied().zip(values.iter().copied()).collect());
        if oracle.membership(&lv)? {
            out.insert(lv);
        }
        let mut i = 0;
        loop {
            if i == values.len() {
                return Ok(out);
            }
            if values[i] < max_len {
                values[i] += 1;
                break;
            }
            values[i] = 0;
            i += 1;
        }
    }
}

/// Closed-form length characterizations, with `v0, v1, v2` standing for
/// `|x|, |y|, |z|`.
///
/// * `lemma1`, for `xaby = yabx`: `x = y`, or one side empty and the other
///   even, or both nonempty with `gcd(x+2, y+2) > 1`.
/// * `example1`, for `xaby = yz`: `x = y + 2`.
/// * `prop4`: `x = y ∧ x > 0 ∧ x | z`.
pub fn reference_formula(name: &str) -> Result<PadFormula, OracleError> {
    let x = || LinearTerm::var(PadVar(0));
    let y = || LinearTerm::var(PadVar(1));
    let z = || LinearTerm::var(PadVar(2));
    let two = || LinearTerm::constant(2);
    Ok(match name {
        "lemma1" => {
            let d = PadVar(3);
            let dt = || LinearTerm::var(d);
            // A common divisor above 1 is at most min(x, y) + 2.
            let common = PadFormula::exists(
                [d],
                PadFormula::and([
                    PadFormula::geq(dt(), 2),
                    PadFormula::leq(dt(), x() + two()),
                    PadFormula::leq(dt(), y() + two()),
                    PadFormula::divides(dt(), x() + two()),
                    PadFormula::divides(dt(), y() + two()),
                ]),
            );
            PadFormula::or([
                PadFormula::eq(x(), y()),
                PadFormula::and([PadFormula::eq(x(), 0), PadFormula::divides(2, y())]),
                PadFormula::and([PadFormula::eq(y(), 0), PadFormula::divides(2, x())]),
                PadFormula::and([PadFormula::geq(x(), 1), PadFormula::geq(y(), 1), common]),
            ])
        }
        "example1" => PadFormula::eq(x(), y() + two()),
        "prop4" => PadFormula::and([PadFormula::eq(x(), y()), PadFormula::geq(x(), 1), PadFormula::divides(x(), z())]),
        other => return Err(OracleError::UnknownName(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pad::{evaluate, Valuation};
    use crate::terms::Signature;

    fn problem(lhs: &str, rhs: &str, vars: &[&str]) -> Problem {
        let sig = Signature::new(&["a", "b"], vars);
        let e = sig.equation(lhs, rhs).unwrap();
        Problem::new(sig, e)
    }

    fn lv(vals: &[u64]) -> LengthVector {
        LengthVector::from_values(vals)
    }

    /// Naive reference: try every assignment with the given lengths.
    fn naive(p: &Problem, lens: &[u64]) -> bool {
        let vars: Vec<Var> = p.variables().into_iter().collect();
        let k = p.signature.letters.len() as u64;
        let total: u64 = lens.iter().sum();
        (0..k.pow(total as u32)).any(|mut code| {
            let mut sigma = Assignment::new();
            for (v, &n) in vars.iter().zip(lens) {
                let w = (0..n)
                    .map(|_| {
                        let a = Letter((code % k) as u16);
                        code /= k;
                        a
                    })
                    .collect();
                sigma.insert(*v, w);
            }
            sigma.check_solution(&p.equation).unwrap()
                && p.constraints
                    .iter()
                    .all(|c| p.automata[c.nfa].nfa.accepts_between(c.from, c.to, sigma.get(c.var).unwrap()))
        })
    }

    #[test]
    fn trivial_cases() {
        let p = problem("a", "b", &[]);
        assert!(enumerate_solutions(&p, 5).unwrap().is_empty());
        let p = problem("", "", &[]);
        assert_eq!(enumerate_solutions(&p, 5).unwrap(), BTreeSet::from([LengthVector::default()]));
    }

    #[test]
    fn gcd_equation_spot_values() {
        let p = problem("x a b y", "y a b x", &["x", "y"]);
        let sols = enumerate_solutions(&p, 6).unwrap();
        assert!(sols.contains(&lv(&[3, 3])));
        assert!(sols.contains(&lv(&[0, 2])));
        assert!(!sols.contains(&lv(&[1, 2])));
    }

    #[test]
    fn witnesses_are_solutions() {
        let p = problem("x a b y", "y a b x", &["x", "y"]);
        let o = Oracle::new(&p);
        let s = o.find_solution(&lv(&[3, 8])).unwrap().unwrap();
        assert!(s.check_solution(&p.equation).unwrap());
        assert_eq!(s.length_vector(), lv(&[3, 8]));
    }

    #[test]
    fn agrees_with_naive_enumeration() {
        let cases = [("x a y", "y a x"), ("x y", "y z"), ("x a b y", "y z"), ("x x", "y"), ("a x b", "x y")];
        for (l, r) in cases {
            let p = problem(l, r, &["x", "y", "z"]);
            let o = Oracle::new(&p);
            let n = o.variables().len();
            let mut vals = vec![0u64; n];
            loop {
                assert_eq!(o.membership(&lv(&vals)).unwrap(), naive(&p, &vals), "{l} = {r} at {vals:?}");
                let mut i = 0;
                while i < n && vals[i] == 3 {
                    vals[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                vals[i] += 1;
            }
        }
    }

    #[test]
    fn constraints_are_respected() {
        let sig = Signature::new(&["a", "b", "#"], &["x", "y", "z"]);
        let e = sig.equation("x y", "y z").unwrap();
        let mut p = Problem::new(sig, e);
        let hash =
            Nfa::from_transitions(3, 2, [(0, Letter(2), 1), (1, Letter(0), 1), (1, Letter(1), 1)], 0, 1).unwrap();
        let i = p.add_automaton("hash_ab", hash);
        p.constrain(Var(0), i);
        p.constrain(Var(1), i);
        let o = Oracle::new(&p);
        for x in 0..=4 {
            for y in 0..=4 {
                for z in 0..=4 {
                    let expected = naive(&p, &[x, y, z]);
                    let found = o.find_solution(&lv(&[x, y, z])).unwrap();
                    assert_eq!(found.is_some(), expected, "{x} {y} {z}");
                    if let Some(s) = found {
                        assert!(s.check_solution(&p.equation).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn budget_is_reported() {
        let sig = Signature::new(&["a", "b"], &["x"]);
        let e = sig.equation("x", "x").unwrap();
        let mut p = Problem::new(sig, e);
        let only_a = Nfa::from_transitions(2, 1, [(0, Letter(0), 0)], 0, 0).unwrap();
        let i = p.add_automaton("a", only_a);
        p.constrain(Var(0), i);
        let o = Oracle::new(&p).with_cap(3);
        assert_eq!(o.membership(&lv(&[10])), Err(OracleError::BudgetExceeded { cap: 3 }));
    }

    #[test]
    fn reference_formulas() {
        let at = |f: &PadFormula, vals: &[u64]| -> bool {
            let v: Valuation = vals.iter().enumerate().map(|(i, &n)| (PadVar(i as u32), n)).collect();
            evaluate(f, &v).unwrap()
        };
        let l1 = reference_formula("lemma1").unwrap();
        assert!(at(&l1, &[0, 4]));
        assert!(at(&l1, &[3, 8]));
        assert!(!at(&l1, &[1, 2]));
        assert!(!at(&l1, &[0, 3]));
        assert!(at(&reference_formula("example1").unwrap(), &[4, 2, 99]));
        assert!(!at(&reference_formula("prop4").unwrap(), &[2, 2, 5]));
        assert!(at(&reference_formula("prop4").unwrap(), &[2, 2, 6]));
        assert_eq!(reference_formula("nope"), Err(OracleError::UnknownName("nope".into())));
    }

    #[test]
    fn swap_equation_on_a_small_grid() {
        let p = problem("x a b y", "y a b x", &["x", "y"]);
        let o = Oracle::new(&p);
        let f = reference_formula("lemma1").unwrap();
        for x in 0..=8u64 {
            for y in 0..=8u64 {
                let v: Valuation = [(PadVar(0), x), (PadVar(1), y)].into_iter().collect();
                assert_eq!(o.membership(&lv(&[x, y])).unwrap(), evaluate(&f, &v).unwrap(), "{x} {y}");
            }
        }
    }
}
