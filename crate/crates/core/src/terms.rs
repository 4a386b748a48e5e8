//! Words over constants and variables, equations, assignments and the
//! syntactic classes (quadratic, regular, oriented) used by the solver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A constant letter, interned as an index into the declared alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u16);

/// A word variable, interned as an index into the declared variable list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u16);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Const(Letter),
    Var(Var),
}

impl Symbol {
    pub fn as_var(self) -> Option<Var> {
        match self {
            Symbol::Var(v) => Some(v),
            Symbol::Const(_) => None,
        }
    }

    pub fn as_const(self) -> Option<Letter> {
        match self {
            Symbol::Const(a) => Some(a),
            Symbol::Var(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("variable {0:?} is not assigned")]
    MissingVariable(Var),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
}

/// A finite sequence of symbols. The empty word is the empty sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    symbols: Vec<Symbol>,
}

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word { symbols }
    }

    pub fn empty() -> Self {
        Word::default()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn head(&self) -> Option<Symbol> {
        self.symbols.first().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.symbols.iter().copied()
    }

    pub fn variables(&self) -> impl Iterator<Item = Var> + '_ {
        self.symbols.iter().filter_map(|s| s.as_var())
    }

    pub fn occurrences(&self, v: Var) -> usize {
        self.variables().filter(|&w| w == v).count()
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.variables().any(|w| w == v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Word { symbols }
    }

    /// The word without its first symbol.
    pub fn tail(&self) -> Word {
        Word { symbols: self.symbols.get(1..).unwrap_or_default().to_vec() }
    }

    /// Replaces every occurrence of `v` by `image`.
    pub fn substitute(&self, v: Var, image: &[Symbol]) -> Word {
        let mut symbols = Vec::with_capacity(self.symbols.len() + image.len());
        for &s in &self.symbols {
            if s == Symbol::Var(v) {
                symbols.extend_from_slice(image);
            } else {
                symbols.push(s);
            }
        }
        Word { symbols }
    }

    pub fn erase(&self, v: Var) -> Word {
        self.substitute(v, &[])
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(symbols: Vec<Symbol>) -> Self {
        Word { symbols }
    }
}

/// A single word equation `lhs = rhs`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Equation {
    pub lhs: Word,
    pub rhs: Word,
}

impl Equation {
    pub fn new(lhs: Word, rhs: Word) -> Self {
        Equation { lhs, rhs }
    }

    /// `ε = ε`
    pub fn trivial() -> Self {
        Equation::default()
    }

    pub fn is_trivial(&self) -> bool {
        self.lhs.is_empty() && self.rhs.is_empty()
    }

    /// Total number of symbols on both sides.
    pub fn size(&self) -> usize {
        self.lhs.len() + self.rhs.len()
    }

    pub fn swapped(&self) -> Equation {
        Equation { lhs: self.rhs.clone(), rhs: self.lhs.clone() }
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        self.lhs.variables().chain(self.rhs.variables()).collect()
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.lhs.contains_var(v) || self.rhs.contains_var(v)
    }

    pub fn occurrences(&self, v: Var) -> usize {
        self.lhs.occurrences(v) + self.rhs.occurrences(v)
    }

    /// Every variable occurs at most twice in `lhs · rhs`.
    pub fn is_quadratic(&self) -> bool {
        self.variables().into_iter().all(|v| self.occurrences(v) <= 2)
    }

    /// Every variable occurs at most once on each side.
    pub fn is_regular(&self) -> bool {
        self.variables().into_iter().all(|v| self.lhs.occurrences(v) <= 1 && self.rhs.occurrences(v) <= 1)
    }

    /// Whether some strict total order on the variables is respected by the
    /// variable occurrences of both sides. Decided as acyclicity of the
    /// precedence digraph; a variable repeated on one side is a self-loop.
    pub fn is_oriented(&self) -> bool {
        let mut succ: BTreeMap<Var, BTreeSet<Var>> = BTreeMap::new();
        for side in [&self.lhs, &self.rhs] {
            let vars: Vec<Var> = side.variables().collect();
            for (i, &a) in vars.iter().enumerate() {
                for &b in &vars[i + 1..] {
                    if a == b {
                        return false;
                    }
                    succ.entry(a).or_default().insert(b);
                }
            }
        }
        // Kahn's algorithm over the variables that appear.
        let nodes = self.variables();
        let mut indegree: BTreeMap<Var, usize> = nodes.iter().map(|&v| (v, 0)).collect();
        for targets in succ.values() {
            for t in targets {
                *indegree.get_mut(t).expect("edge target is a variable") += 1;
            }
        }
        let mut ready: Vec<Var> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for t in succ.get(&v).into_iter().flatten() {
                let d = indegree.get_mut(t).expect("edge target is a variable");
                *d -= 1;
                if *d == 0 {
                    ready.push(*t);
                }
            }
        }
        seen == nodes.len()
    }
}

/// A map from variables to constant words.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Assignment {
    map: BTreeMap<Var, Vec<Letter>>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn get(&self, v: Var) -> Option<&[Letter]> {
        self.map.get(&v).map(Vec::as_slice)
    }

    pub fn insert(&mut self, v: Var, image: Vec<Letter>) -> Option<Vec<Letter>> {
        self.map.insert(v, image)
    }

    pub fn remove(&mut self, v: Var) -> Option<Vec<Letter>> {
        self.map.remove(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = Var> + '_ {
        self.map.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &[Letter])> {
        self.map.iter().map(|(&v, w)| (v, w.as_slice()))
    }

    /// Keeps only the variables accepted by `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(Var) -> bool) {
        self.map.retain(|&v, _| keep(v));
    }

    /// The homomorphic image of `w`: constants map to themselves.
    pub fn apply(&self, w: &Word) -> Result<Vec<Letter>, TermError> {
        let mut out = Vec::new();
        for s in w.iter() {
            match s {
                Symbol::Const(a) => out.push(a),
                Symbol::Var(v) => out.extend_from_slice(self.get(v).ok_or(TermError::MissingVariable(v))?),
            }
        }
        Ok(out)
    }

    pub fn check_solution(&self, e: &Equation) -> Result<bool, TermError> {
        Ok(self.apply(&e.lhs)? == self.apply(&e.rhs)?)
    }

    pub fn length_vector(&self) -> LengthVector {
        LengthVector(self.map.iter().map(|(&v, w)| (v, w.len() as u64)).collect())
    }
}

impl FromIterator<(Var, Vec<Letter>)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (Var, Vec<Letter>)>>(iter: I) -> Self {
        Assignment { map: iter.into_iter().collect() }
    }
}

/// Solution lengths, one entry per variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LengthVector(pub BTreeMap<Var, u64>);

impl LengthVector {
    /// Lengths for the variables `0..values.len()` in declaration order.
    pub fn from_values(values: &[u64]) -> Self {
        LengthVector(values.iter().enumerate().map(|(i, &n)| (Var(i as u16), n)).collect())
    }

    pub fn get(&self, v: Var) -> Option<u64> {
        self.0.get(&v).copied()
    }

    pub fn values(&self) -> Vec<u64> {
        self.0.values().copied().collect()
    }
}

/// Names for letters and variables; used for parsing and printing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub letters: Vec<String>,
    pub vars: Vec<String>,
}

impl Signature {
    pub fn new<S: AsRef<str>>(letters: &[S], vars: &[S]) -> Self {
        Signature {
            letters: letters.iter().map(|s| s.as_ref().to_string()).collect(),
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.letters.iter().position(|l| l == name).map(|i| Letter(i as u16))
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.vars.iter().position(|l| l == name).map(|i| Var(i as u16))
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.letter(name).map(Symbol::Const).or_else(|| self.var(name).map(Symbol::Var))
    }

    pub fn letter_name(&self, a: Letter) -> &str {
        &self.letters[a.0 as usize]
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.vars[v.index()]
    }

    /// Parses whitespace-separated symbol names; `ε` or an empty string is ε.
    pub fn word(&self, text: &str) -> Result<Word, TermError> {
        text.split_whitespace()
            .filter(|t| *t != "ε")
            .map(|t| self.symbol(t).ok_or_else(|| TermError::UnknownSymbol(t.to_string())))
            .collect::<Result<Vec<_>, _>>()
            .map(Word::new)
    }

    pub fn equation(&self, lhs: &str, rhs: &str) -> Result<Equation, TermError> {
        Ok(Equation::new(self.word(lhs)?, self.word(rhs)?))
    }

    /// Parses a constant word written letter by letter (single-character
    /// letter names only).
    pub fn text(&self, s: &str) -> Result<Vec<Letter>, TermError> {
        s.chars()
            .map(|c| {
                let name = c.to_string();
                self.letter(&name).ok_or(TermError::UnknownSymbol(name))
            })
            .collect()
    }

    pub fn fmt_text(&self, w: &[Letter]) -> String {
        if w.is_empty() {
            return "ε".to_string();
        }
        let single = self.letters.iter().all(|l| l.chars().count() == 1);
        let names: Vec<&str> = w.iter().map(|&a| self.letter_name(a)).collect();
        if single {
            names.concat()
        } else {
            names.join(" ")
        }
    }

    pub fn fmt_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "ε".to_string();
        }
        w.iter()
            .map(|s| match s {
                Symbol::Const(a) => self.letter_name(a).to_string(),
                Symbol::Var(v) => self.var_name(v).to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn fmt_equation(&self, e: &Equation) -> String {
        format!("{} = {}", self.fmt_word(&e.lhs), self.fmt_word(&e.rhs))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "ε");
        }
        for (i, s) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match s {
                Symbol::Const(a) => write!(f, "c{}", a.0)?,
                Symbol::Var(v) => write!(f, "v{}", v.0)?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig() -> Signature {
        Signature::new(&["a", "b"], &["x", "y", "z"])
    }

    fn assign(s: &Signature, pairs: &[(&str, &str)]) -> Assignment {
        pairs.iter().map(|(v, w)| (s.var(v).unwrap(), s.text(w).unwrap())).collect()
    }

    #[test]
    fn homomorphism_examples() {
        let s = sig();
        let sigma = assign(&s, &[("x", "a"), ("y", "bb")]);
        assert_eq!(sigma.apply(&Word::empty()).unwrap(), vec![]);
        let w = s.word("x a b y").unwrap();
        assert_eq!(s.fmt_text(&sigma.apply(&w).unwrap()), "aabbb");

        let sigma = assign(&s, &[("x", "ab"), ("y", "abaaab")]);
        let w = s.word("x y").unwrap();
        assert_eq!(s.fmt_text(&sigma.apply(&w).unwrap()), "ababaaab");
    }

    #[test]
    fn missing_variable_is_reported() {
        let s = sig();
        let sigma = assign(&s, &[("x", "a")]);
        let w = s.word("x y").unwrap();
        assert_eq!(sigma.apply(&w), Err(TermError::MissingVariable(Var(1))));
        let e = s.equation("x", "y").unwrap();
        assert!(sigma.check_solution(&e).is_err());
    }

    #[test]
    fn check_solution_examples() {
        let s = sig();
        assert!(Assignment::new().check_solution(&Equation::trivial()).unwrap());
        let e = s.equation("x y", "y x").unwrap();
        assert!(assign(&s, &[("x", "ab"), ("y", "abab")]).check_solution(&e).unwrap());
        assert!(!assign(&s, &[("x", "ab"), ("y", "ba")]).check_solution(&e).unwrap());
    }

    #[test]
    fn class_predicates() {
        let s = sig();
        let eq = |l: &str, r: &str| s.equation(l, r).unwrap();
        assert!(eq("x y", "y x").is_quadratic());
        assert!(eq("x x y y", "z z").is_quadratic());
        assert!(!eq("x x x", "y").is_quadratic());

        assert!(eq("x y", "y x").is_regular());
        assert!(!eq("x x y y", "z z").is_regular());
        assert!(Equation::trivial().is_regular());

        assert!(eq("x y", "y z").is_oriented());
        assert!(!eq("x y", "y x").is_oriented());
        assert!(eq("a", "b").is_oriented());
        assert!(!eq("x a x", "b").is_oriented());
    }

    #[test]
    fn length_vectors() {
        let s = sig();
        let lv = |pairs: &[(&str, &str)]| assign(&s, pairs).length_vector();
        assert_eq!(lv(&[("x", "")]), LengthVector::from_values(&[0]));
        assert_eq!(lv(&[("x", "a"), ("y", "bb")]), LengthVector::from_values(&[1, 2]));
        assert_eq!(lv(&[("x", "ab"), ("y", "abaaab")]), LengthVector::from_values(&[2, 6]));
    }

    fn arb_word(vars: u16) -> impl Strategy<Value = Word> {
        prop::collection::vec(
            prop_oneof![(0u16..2).prop_map(|a| Symbol::Const(Letter(a))), (0..vars).prop_map(|v| Symbol::Var(Var(v))),],
            0..7,
        )
        .prop_map(Word::new)
    }

    fn arb_assignment(vars: u16) -> impl Strategy<Value = Assignment> {
        prop::collection::vec(prop::collection::vec((0u16..2).prop_map(Letter), 0..4), vars as usize)
            .prop_map(|ws| ws.into_iter().enumerate().map(|(i, w)| (Var(i as u16), w)).collect())
    }

    proptest! {
        #[test]
        fn homomorphism_distributes(u in arb_word(3), v in arb_word(3), sigma in arb_assignment(3)) {
            let mut joined = sigma.apply(&u).unwrap();
            joined.extend(sigma.apply(&v).unwrap());
            prop_assert_eq!(sigma.apply(&u.concat(&v)).unwrap(), joined);
        }

        #[test]
        fn regular_implies_quadratic(l in arb_word(3), r in arb_word(3)) {
            let e = Equation::new(l, r);
            prop_assert!(!e.is_regular() || e.is_quadratic());
        }

        #[test]
        fn orientation_ignores_side_order(l in arb_word(3), r in arb_word(3)) {
            let e = Equation::new(l, r);
            prop_assert_eq!(e.is_oriented(), e.swapped().is_oriented());
        }
    }
}
