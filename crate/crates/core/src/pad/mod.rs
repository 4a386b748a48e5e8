//! Existential Presburger arithmetic with divisibility (PAD): linear terms,
//! negation-free formulas, evaluation and a bounded satisfiability backend.
//!
//! Variables range over ℕ. Terms are evaluated in `i128`. `0 | n` holds
//! iff `n = 0`.

mod engine;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::automata::UnarySemilinear;

pub use engine::{enumerate_models, is_satisfiable, ModelSet, SatResult, BOUND_SCHEDULE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PadVar(pub u32);

impl PadVar {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadError {
    #[error("variable {0:?} has no value")]
    UnboundVariable(PadVar),
    #[error("the existential could not be decided within the search bound")]
    Undetermined,
}

/// `Σ cᵢ·xᵢ + k`, coefficients sorted by variable with no zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearTerm {
    coeffs: Vec<(PadVar, i64)>,
    constant: i64,
}

impl LinearTerm {
    pub fn constant(k: i64) -> Self {
        LinearTerm { coeffs: Vec::new(), constant: k }
    }

    pub fn var(v: PadVar) -> Self {
        LinearTerm { coeffs: vec![(v, 1)], constant: 0 }
    }

    pub fn from_parts(coeffs: impl IntoIterator<Item = (PadVar, i64)>, constant: i64) -> Self {
        let mut t = LinearTerm::constant(constant);
        for (v, c) in coeffs {
            t.add_coeff(v, c);
        }
        t
    }

    fn add_coeff(&mut self, v: PadVar, c: i64) {
        match self.coeffs.binary_search_by_key(&v, |&(w, _)| w) {
            Ok(i) => {
                self.coeffs[i].1 += c;
                if self.coeffs[i].1 == 0 {
                    self.coeffs.remove(i);
                }
            }
            Err(i) if c != 0 => self.coeffs.insert(i, (v, c)),
            Err(_) => {}
        }
    }

    pub fn coeffs(&self) -> &[(PadVar, i64)] {
        &self.coeffs
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, v: PadVar) -> i64 {
        self.coeffs.iter().find(|&&(w, _)| w == v).map_or(0, |&(_, c)| c)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = PadVar> + '_ {
        self.coeffs.iter().map(|&(v, _)| v)
    }

    pub fn eval(&self, val: &Valuation) -> Result<i128, PadError> {
        let mut sum = self.constant as i128;
        for &(v, c) in &self.coeffs {
            let x = val.get(v).ok_or(PadError::UnboundVariable(v))?;
            sum += c as i128 * x as i128;
        }
        Ok(sum)
    }

    pub fn rename(&self, f: &impl Fn(PadVar) -> PadVar) -> LinearTerm {
        LinearTerm::from_parts(self.coeffs.iter().map(|&(v, c)| (f(v), c)), self.constant)
    }

    /// Replaces `v` by `by`.
    pub fn substitute(&self, v: PadVar, by: &LinearTerm) -> LinearTerm {
        let c = self.coeff(v);
        if c == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.add_coeff(v, -c);
        out + by.clone() * c
    }
}

impl From<PadVar> for LinearTerm {
    fn from(v: PadVar) -> Self {
        LinearTerm::var(v)
    }
}

impl From<i64> for LinearTerm {
    fn from(k: i64) -> Self {
        LinearTerm::constant(k)
    }
}

impl Add for LinearTerm {
    type Output = LinearTerm;
    fn add(mut self, rhs: LinearTerm) -> LinearTerm {
        self.constant += rhs.constant;
        for (v, c) in rhs.coeffs {
            self.add_coeff(v, c);
        }
        self
    }
}

impl Sub for LinearTerm {
    type Output = LinearTerm;
    fn sub(self, rhs: LinearTerm) -> LinearTerm {
        self + -rhs
    }
}

impl Neg for LinearTerm {
    type Output = LinearTerm;
    fn neg(self) -> LinearTerm {
        self * -1
    }
}

impl Mul<i64> for LinearTerm {
    type Output = LinearTerm;
    fn mul(mut self, k: i64) -> LinearTerm {
        if k == 0 {
            return LinearTerm::default();
        }
        self.constant *= k;
        for (_, c) in &mut self.coeffs {
            *c *= k;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Leq(LinearTerm, LinearTerm),
    Eq(LinearTerm, LinearTerm),
    /// `d | n`.
    Divides(LinearTerm, LinearTerm),
}

impl Atom {
    pub fn eval(&self, val: &Valuation) -> Result<bool, PadError> {
        Ok(match self {
            Atom::Leq(a, b) => a.eval(val)? <= b.eval(val)?,
            Atom::Eq(a, b) => a.eval(val)? == b.eval(val)?,
            Atom::Divides(d, n) => divides(d.eval(val)?, n.eval(val)?),
        })
    }

    fn terms(&self) -> [&LinearTerm; 2] {
        match self {
            Atom::Leq(a, b) | Atom::Eq(a, b) | Atom::Divides(a, b) => [a, b],
        }
    }

    fn rename(&self, f: &impl Fn(PadVar) -> PadVar) -> Atom {
        match self {
            Atom::Leq(a, b) => Atom::Leq(a.rename(f), b.rename(f)),
            Atom::Eq(a, b) => Atom::Eq(a.rename(f), b.rename(f)),
            Atom::Divides(a, b) => Atom::Divides(a.rename(f), b.rename(f)),
        }
    }
}

pub(crate) fn divides(d: i128, n: i128) -> bool {
    if d == 0 {
        n == 0
    } else {
        n % d == 0
    }
}

/// Negation-free existential formulas. `And(vec![])` is true and
/// `Or(vec![])` is false.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PadFormula {
    Atom(Atom),
    And(Vec<PadFormula>),
    Or(Vec<PadFormula>),
    Exists(Vec<PadVar>, Box<PadFormula>),
}

impl PadFormula {
    pub fn tt() -> Self {
        PadFormula::And(Vec::new())
    }

    pub fn ff() -> Self {
        PadFormula::Or(Vec::new())
    }

    pub fn is_true(&self) -> bool {
        matches!(self, PadFormula::And(v) if v.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, PadFormula::Or(v) if v.is_empty())
    }

    pub fn leq(a: impl Into<LinearTerm>, b: impl Into<LinearTerm>) -> Self {
        PadFormula::Atom(Atom::Leq(a.into(), b.into()))
    }

    pub fn lt(a: impl Into<LinearTerm>, b: impl Into<LinearTerm>) -> Self {
        PadFormula::leq(a.into() + LinearTerm::constant(1), b)
    }

    pub fn geq(a: impl Into<LinearTerm>, b: impl Into<LinearTerm>) -> Self {
        PadFormula::leq(b, a)
    }

    pub fn gt(a: impl Into<LinearTerm>, b: impl Into<LinearTerm>) -> Self {
        PadFormula::lt(b, a)
    }

    pub fn eq(a: impl Into<LinearTerm>, b: impl Into<LinearTerm>) -> Self {
        PadFormula::Atom(Atom::Eq(a.into(), b.into()))
    }

    /// `a ≠ b` as `a < b ∨ a > b`.
    pub fn neq(a: impl Into<LinearTerm>, b: impl Into<LinearTerm>) -> Self {
        let (a, b) = (a.into(), b.into());
        PadFormula::Or(vec![PadFormula::lt(a.clone(), b.clone()), PadFormula::gt(a, b)])
    }

    pub fn divides(d: impl Into<LinearTerm>, n: impl Into<LinearTerm>) -> Self {
        PadFormula::Atom(Atom::Divides(d.into(), n.into()))
    }

    /// Conjunction, flattening nested conjunctions and absorbing `false`.
    pub fn and(parts: impl IntoIterator<Item = PadFormula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                PadFormula::And(inner) => out.extend(inner),
                f if f.is_false() => return PadFormula::ff(),
                f => out.push(f),
            }
        }
        if out.len() == 1 {
            out.pop().expect("one element")
        } else {
            PadFormula::And(out)
        }
    }

    /// Disjunction, flattening nested disjunctions and absorbing `true`.
    pub fn or(parts: impl IntoIterator<Item = PadFormula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                PadFormula::Or(inner) => out.extend(inner),
                f if f.is_true() => return PadFormula::tt(),
                f => out.push(f),
            }
        }
        if out.len() == 1 {
            out.pop().expect("one element")
        } else {
            PadFormula::Or(out)
        }
    }

    pub fn exists(vars: impl IntoIterator<Item = PadVar>, body: PadFormula) -> Self {
        let vars: Vec<PadVar> = vars.into_iter().collect();
        if vars.is_empty() || body.is_false() || body.is_true() {
            return body;
        }
        PadFormula::Exists(vars, Box::new(body))
    }

    pub fn free_vars(&self) -> BTreeSet<PadVar> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out, &mut Vec::new());
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<PadVar>, bound: &mut Vec<PadVar>) {
        match self {
            PadFormula::Atom(a) => {
                for t in a.terms() {
                    out.extend(t.vars().filter(|v| !bound.contains(v)));
                }
            }
            PadFormula::And(fs) | PadFormula::Or(fs) => {
                for f in fs {
                    f.collect_free(out, bound);
                }
            }
            PadFormula::Exists(vs, body) => {
                let depth = bound.len();
                bound.extend(vs);
                body.collect_free(out, bound);
                bound.truncate(depth);
            }
        }
    }

    /// Every variable that occurs, free or bound.
    pub fn all_vars(&self) -> BTreeSet<PadVar> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            for t in a.terms() {
                out.extend(t.vars());
            }
        });
        self.visit_binders(&mut |v| {
            out.insert(v);
        });
        out
    }

    fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            PadFormula::Atom(a) => f(a),
            PadFormula::And(fs) | PadFormula::Or(fs) => fs.iter().for_each(|g| g.visit_atoms(f)),
            PadFormula::Exists(_, body) => body.visit_atoms(f),
        }
    }

    fn visit_binders(&self, f: &mut impl FnMut(PadVar)) {
        match self {
            PadFormula::Atom(_) => {}
            PadFormula::And(fs) | PadFormula::Or(fs) => fs.iter().for_each(|g| g.visit_binders(f)),
            PadFormula::Exists(vs, body) => {
                vs.iter().for_each(|&v| f(v));
                body.visit_binders(f);
            }
        }
    }

    /// Renames every variable occurrence, bound ones included.
    pub fn rename(&self, f: &impl Fn(PadVar) -> PadVar) -> PadFormula {
        match self {
            PadFormula::Atom(a) => PadFormula::Atom(a.rename(f)),
            PadFormula::And(fs) => PadFormula::And(fs.iter().map(|g| g.rename(f)).collect()),
            PadFormula::Or(fs) => PadFormula::Or(fs.iter().map(|g| g.rename(f)).collect()),
            PadFormula::Exists(vs, body) => {
                PadFormula::Exists(vs.iter().map(|&v| f(v)).collect(), Box::new(body.rename(f)))
            }
        }
    }

    /// Number of atoms.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit_atoms(&mut |_| n += 1);
        n
    }

    /// Prefix notation using `names` for variables.
    pub fn display<'a>(&'a self, names: &'a VarPool) -> impl fmt::Display + 'a {
        Prefix { f: self, names: Some(names) }
    }
}

impl fmt::Display for PadFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Prefix { f: self, names: None }.fmt(f)
    }
}

struct Prefix<'a> {
    f: &'a PadFormula,
    names: Option<&'a VarPool>,
}

impl Prefix<'_> {
    fn name(&self, v: PadVar) -> String {
        match self.names.and_then(|n| n.names.get(v.index())) {
            Some(s) => s.clone(),
            None => format!("v{}", v.0),
        }
    }

    fn term(&self, t: &LinearTerm) -> String {
        let mut parts: Vec<String> = t
            .coeffs()
            .iter()
            .map(|&(v, c)| if c == 1 { self.name(v) } else { format!("(* {} {})", c, self.name(v)) })
            .collect();
        if t.constant_part() != 0 || parts.is_empty() {
            parts.push(t.constant_part().to_string());
        }
        if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }

    fn write(&self, g: &PadFormula, out: &mut String) {
        match g {
            PadFormula::Atom(a) => {
                let (op, [x, y]) = match a {
                    Atom::Leq(..) => ("<=", a.terms()),
                    Atom::Eq(..) => ("=", a.terms()),
                    Atom::Divides(..) => ("divides", a.terms()),
                };
                out.push_str(&format!("({} {} {})", op, self.term(x), self.term(y)));
            }
            PadFormula::And(fs) if fs.is_empty() => out.push_str("true"),
            PadFormula::Or(fs) if fs.is_empty() => out.push_str("false"),
            PadFormula::And(fs) | PadFormula::Or(fs) => {
                out.push_str(if matches!(g, PadFormula::And(_)) { "(and" } else { "(or" });
                for f in fs {
                    out.push(' ');
                    self.write(f, out);
                }
                out.push(')');
            }
            PadFormula::Exists(vs, body) => {
                let names: Vec<String> = vs.iter().map(|&v| self.name(v)).collect();
                out.push_str(&format!("(exists ({}) ", names.join(" ")));
                self.write(body, out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Prefix<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(self.f, &mut s);
        f.write_str(&s)
    }
}

/// Allocates variables and remembers their names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarPool {
    names: Vec<String>,
}

impl VarPool {
    pub fn new() -> Self {
        VarPool::default()
    }

    pub fn fresh(&mut self, name: impl Into<String>) -> PadVar {
        self.names.push(name.into());
        PadVar((self.names.len() - 1) as u32)
    }

    pub fn fresh_vec(&mut self, prefix: &str, n: usize) -> Vec<PadVar> {
        (0..n).map(|i| self.fresh(format!("{prefix}{i}"))).collect()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: PadVar) -> &str {
        &self.names[v.index()]
    }
}

/// Values for variables, stored densely by index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation {
    values: Vec<Option<u64>>,
}

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn get(&self, v: PadVar) -> Option<u64> {
        self.values.get(v.index()).copied().flatten()
    }

    pub fn set(&mut self, v: PadVar, n: u64) {
        if self.values.len() <= v.index() {
            self.values.resize(v.index() + 1, None);
        }
        self.values[v.index()] = Some(n);
    }

    pub fn unset(&mut self, v: PadVar) {
        if let Some(slot) = self.values.get_mut(v.index()) {
            *slot = None;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (PadVar, u64)> + '_ {
        self.values.iter().enumerate().filter_map(|(i, x)| x.map(|n| (PadVar(i as u32), n)))
    }
}

impl FromIterator<(PadVar, u64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (PadVar, u64)>>(iter: I) -> Self {
        let mut v = Valuation::new();
        for (k, n) in iter {
            v.set(k, n);
        }
        v
    }
}

/// Standard semantics. Existentials are decided by solving for their
/// variables from equalities when possible, otherwise by the bounded
/// backend; an inconclusive backend answer is `Undetermined`.
pub fn evaluate(f: &PadFormula, val: &Valuation) -> Result<bool, PadError> {
    let mut val = val.clone();
    eval_in(f, &mut val)
}

fn eval_in(f: &PadFormula, val: &mut Valuation) -> Result<bool, PadError> {
    match f {
        PadFormula::Atom(a) => a.eval(val),
        PadFormula::And(fs) => {
            for g in fs {
                if !eval_in(g, val)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        PadFormula::Or(fs) => {
            let mut undetermined = false;
            for g in fs {
                match eval_in(g, val) {
                    Ok(true) => return Ok(true),
                    Ok(false) => {}
                    Err(PadError::Undetermined) => undetermined = true,
                    Err(e) => return Err(e),
                }
            }
            if undetermined {
                Err(PadError::Undetermined)
            } else {
                Ok(false)
            }
        }
        PadFormula::Exists(vs, body) => {
            let saved: Vec<Option<u64>> = vs.iter().map(|&v| val.get(v)).collect();
            for &v in vs {
                val.unset(v);
            }
            let result = eval_exists(vs, body, val);
            for (&v, old) in vs.iter().zip(saved) {
                match old {
                    Some(n) => val.set(v, n),
                    None => val.unset(v),
                }
            }
            result
        }
    }
}

fn eval_exists(vs: &[PadVar], body: &PadFormula, val: &mut Valuation) -> Result<bool, PadError> {
    let conjuncts: Vec<&PadFormula> = match body {
        PadFormula::And(fs) => fs.iter().collect(),
        f => vec![f],
    };
    // Fix bound variables that an equality with a single unknown determines.
    loop {
        let open: Vec<PadVar> = vs.iter().copied().filter(|&v| val.get(v).is_none()).collect();
        if open.is_empty() {
            return eval_in(body, val);
        }
        let mut progress = false;
        for c in &conjuncts {
            let PadFormula::Atom(Atom::Eq(a, b)) = c else { continue };
            let t = a.clone() - b.clone();
            let unknown: Vec<PadVar> = t.vars().filter(|v| val.get(*v).is_none()).collect();
            let [v] = unknown[..] else { continue };
            if !open.contains(&v) {
                continue;
            }
            let c = t.coeff(v) as i128;
            let rest = t.substitute(v, &LinearTerm::constant(0)).eval(val)?;
            if rest % c != 0 || -rest / c < 0 {
                return Ok(false);
            }
            val.set(v, (-rest / c) as u64);
            progress = true;
        }
        if !progress {
            break;
        }
    }
    // Fall back to the backend with everything already known fixed.
    let known: Vec<(PadVar, u64)> = body.free_vars().into_iter().filter_map(|v| val.get(v).map(|n| (v, n))).collect();
    let open: Vec<PadVar> = vs.iter().copied().filter(|&v| val.get(v).is_none()).collect();
    let missing = body.free_vars().into_iter().find(|v| val.get(*v).is_none() && !open.contains(v));
    if let Some(v) = missing {
        return Err(PadError::UnboundVariable(v));
    }
    match engine::solve_with_fixed(body, &known) {
        SatResult::Sat(_) => Ok(true),
        SatResult::Unsat => Ok(false),
        SatResult::Unknown(_) => Err(PadError::Undetermined),
    }
}

/// `t ∈ A ∪ (A' + bℕ)` without quantifiers: `∃k ≥ 0. t = a' + bk` is
/// written `t ≥ a' ∧ b | t − a'`.
pub fn lower_unary_membership(t: &LinearTerm, u: &UnarySemilinear) -> PadFormula {
    let mut parts = Vec::new();
    for &a in u.finite() {
        parts.push(PadFormula::eq(t.clone(), a as i64));
    }
    for &a in u.periodic() {
        let ge = PadFormula::geq(t.clone(), a as i64);
        if u.period() == 1 {
            parts.push(ge);
        } else {
            let shifted = t.clone() - LinearTerm::constant(a as i64);
            parts.push(PadFormula::and([ge, PadFormula::divides(u.period() as i64, shifted)]));
        }
    }
    PadFormula::or(parts)
}

/// The quantified form `⋁ t = a ∨ ⋁ ∃k. t = a' + bk`, with `k` drawn from
/// `pool`.
pub fn lower_unary_membership_quantified(t: &LinearTerm, u: &UnarySemilinear, pool: &mut VarPool) -> PadFormula {
    let mut parts: Vec<PadFormula> = u.finite().iter().map(|&a| PadFormula::eq(t.clone(), a as i64)).collect();
    for &a in u.periodic() {
        let k = pool.fresh("k");
        let rhs = LinearTerm::constant(a as i64) + LinearTerm::var(k) * u.period() as i64;
        parts.push(PadFormula::exists([k], PadFormula::eq(t.clone(), rhs)));
    }
    PadFormula::or(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(i: u32) -> PadVar {
        PadVar(i)
    }

    fn t(i: u32) -> LinearTerm {
        LinearTerm::var(v(i))
    }

    fn val(pairs: &[(u32, u64)]) -> Valuation {
        pairs.iter().map(|&(i, n)| (v(i), n)).collect()
    }

    #[test]
    fn divisibility_atoms() {
        let e = Valuation::new();
        assert!(evaluate(&PadFormula::divides(3, LinearTerm::constant(9) - 0.into()), &e).unwrap());
        assert!(!evaluate(&PadFormula::divides(0, 5), &e).unwrap());
        assert!(evaluate(&PadFormula::divides(0, 0), &e).unwrap());
        let f = PadFormula::divides(t(0) + 2.into(), t(1) + 2.into());
        assert!(evaluate(&f, &val(&[(0, 3), (1, 8)])).unwrap());
        assert!(!evaluate(&f, &val(&[(0, 1), (1, 2)])).unwrap());
    }

    #[test]
    fn missing_values_are_reported() {
        assert_eq!(evaluate(&PadFormula::eq(t(4), 1), &Valuation::new()), Err(PadError::UnboundVariable(v(4))));
    }

    #[test]
    fn term_arithmetic() {
        let a = t(0) * 2 + t(1) - t(0) * 2 + 3.into();
        assert_eq!(a, LinearTerm::from_parts([(v(1), 1)], 3));
        assert_eq!((t(0) - t(0)).coeffs(), &[]);
        let s = (t(0) + t(1)).substitute(v(0), &(t(1) + 1.into()));
        assert_eq!(s, LinearTerm::from_parts([(v(1), 2)], 1));
    }

    #[test]
    fn connective_identities() {
        assert!(PadFormula::and([]).is_true());
        assert!(PadFormula::or([]).is_false());
        assert!(PadFormula::and([PadFormula::tt(), PadFormula::ff()]).is_false());
        assert!(PadFormula::or([PadFormula::ff(), PadFormula::tt()]).is_true());
        assert!(evaluate(&PadFormula::tt(), &Valuation::new()).unwrap());
        assert!(!evaluate(&PadFormula::ff(), &Valuation::new()).unwrap());
    }

    #[test]
    fn existentials_by_equation_solving() {
        // ∃k. x = 2k
        let k = v(9);
        let f = PadFormula::exists([k], PadFormula::eq(t(0), t(9) * 2));
        assert!(evaluate(&f, &val(&[(0, 6)])).unwrap());
        assert!(!evaluate(&f, &val(&[(0, 7)])).unwrap());
        // An outer value for the bound variable is ignored and restored.
        let mut outer = val(&[(0, 6), (9, 100)]);
        assert!(evaluate(&f, &outer).unwrap());
        outer.set(v(0), 8);
        assert_eq!(outer.get(k), Some(100));
    }

    #[test]
    fn existentials_by_search() {
        // ∃d. 2 ≤ d ∧ d | x ∧ d | y
        let d = v(5);
        let body = PadFormula::and([
            PadFormula::leq(2, t(5)),
            PadFormula::leq(t(5), t(0)),
            PadFormula::divides(t(5), t(0)),
            PadFormula::divides(t(5), t(1)),
        ]);
        let f = PadFormula::exists([d], body);
        assert!(evaluate(&f, &val(&[(0, 6), (1, 9)])).unwrap());
        assert!(!evaluate(&f, &val(&[(0, 5), (1, 9)])).unwrap());
    }

    #[test]
    fn membership_lowering_examples() {
        let x = t(0);
        let zero = UnarySemilinear::finite_set([0]);
        assert_eq!(lower_unary_membership(&x, &zero), PadFormula::eq(x.clone(), 0));
        let even = UnarySemilinear::new([], [0], 2).unwrap();
        let pos = UnarySemilinear::new([], [1], 1).unwrap();
        assert_eq!(lower_unary_membership(&x, &pos), PadFormula::geq(x.clone(), 1));
        let mut pool = VarPool::new();
        pool.fresh("x");
        let quantified = lower_unary_membership_quantified(&x, &even, &mut pool);
        for n in 0..=20 {
            let at = val(&[(0, n)]);
            assert_eq!(evaluate(&lower_unary_membership(&x, &even), &at).unwrap(), n % 2 == 0);
            assert_eq!(evaluate(&quantified, &at).unwrap(), n % 2 == 0);
            assert_eq!(evaluate(&lower_unary_membership(&x, &pos), &at).unwrap(), n >= 1);
        }
    }

    #[test]
    fn prefix_printing() {
        let mut pool = VarPool::new();
        let x = pool.fresh("x");
        let y = pool.fresh("y");
        let f = PadFormula::and([
            PadFormula::divides(LinearTerm::var(x), LinearTerm::var(y) - LinearTerm::constant(1)),
            PadFormula::leq(LinearTerm::var(x) * 2, 7),
        ]);
        assert_eq!(f.display(&pool).to_string(), "(and (divides x (+ y -1)) (<= (* 2 x) 7))");
        assert_eq!(PadFormula::tt().to_string(), "true");
    }

    fn arb_semilinear() -> impl Strategy<Value = UnarySemilinear> {
        (prop::collection::btree_set(0u64..8, 0..3), prop::collection::btree_set(0u64..8, 0..3), 1u64..5)
            .prop_map(|(a, p, b)| UnarySemilinear::new(a, p, b).unwrap())
    }

    proptest! {
        #[test]
        fn lowering_agrees_with_membership(u in arb_semilinear(), n in 0u64..40) {
            let at = val(&[(0, n)]);
            prop_assert_eq!(evaluate(&lower_unary_membership(&t(0), &u), &at).unwrap(), u.contains(n));
            let mut pool = VarPool::new();
            pool.fresh("x");
            let q = lower_unary_membership_quantified(&t(0), &u, &mut pool);
            prop_assert_eq!(evaluate(&q, &at).unwrap(), u.contains(n));
        }
    }
}
