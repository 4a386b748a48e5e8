//! Problem files: an equation, named automata, regular constraints and a
//! length constraint.
//!
//! ```text
//! # comment (only at the start of a line, since `#` may be a letter)
//! alphabet: a b #;
//! vars: x y z;
//! eq: x y = y z
//! nfa hash_ab {
//!   states 2; init 0; final 1;
//!   trans (0, #, 1) (1, a, 1) (1, b, 1);
//! }
//! re: x in nfa hash_ab;
//! re: y in nfa "hash_ab" from 0 to 1;
//! phi: |x| = 2 && |z| >= 2*|y| + 1
//! ```
//!
//! A statement ends at `;` or at the end of its line. Several `phi:` lines
//! are conjoined.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::automata::Nfa;
use crate::nielsen::{RegularConstraint, RewriteState, Rewriter};
use crate::pad::{Atom, LinearTerm, PadFormula, PadVar};
use crate::terms::{Equation, Letter, Signature, Var, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown symbol `{name}`")]
    UnknownSymbol { line: usize, col: usize, name: String },
    #[error("{line}:{col}: automaton `{name}` uses `{letter}`, which is not in the alphabet")]
    AlphabetMismatch { line: usize, col: usize, name: String, letter: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedNfa {
    pub name: String,
    pub nfa: Nfa,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub signature: Signature,
    pub equation: Equation,
    pub automata: Vec<NamedNfa>,
    pub constraints: Vec<RegularConstraint>,
    /// Over `length_var(x)` for declared variables `x`.
    pub length_constraint: PadFormula,
}

/// A standalone length constraint in `phi:` syntax over `sig`'s variables.
pub fn parse_phi(text: &str, sig: &Signature) -> Result<PadFormula, ParseError> {
    let mut p = Parser::new(text);
    let f = p.phi(sig)?;
    p.skip(true);
    if p.peek().is_some() {
        return Err(p.err("unexpected input after the constraint"));
    }
    Ok(f)
}

/// The PAD variable standing for `|x|`.
pub fn length_var(x: Var) -> PadVar {
    PadVar(x.0 as u32)
}

impl Problem {
    pub fn new(signature: Signature, equation: Equation) -> Self {
        Problem {
            signature,
            equation,
            automata: Vec::new(),
            constraints: Vec::new(),
            length_constraint: PadFormula::tt(),
        }
    }

    /// Registers an automaton and returns its index.
    pub fn add_automaton(&mut self, name: impl Into<String>, nfa: Nfa) -> usize {
        self.automata.push(NamedNfa { name: name.into(), nfa });
        self.automata.len() - 1
    }

    /// `x ∈ L(A)` for the automaton at `index`, between its initial and
    /// final states.
    pub fn constrain(&mut self, x: Var, index: usize) {
        let nfa = &self.automata[index].nfa;
        let c = RegularConstraint::new(x, index, nfa.initial(), nfa.final_state());
        self.constraints.push(c);
    }

    pub fn with_length_constraint(mut self, phi: PadFormula) -> Self {
        self.length_constraint = phi;
        self
    }

    /// Variables of the equation together with the constrained ones.
    pub fn variables(&self) -> BTreeSet<Var> {
        let mut vs = self.equation.variables();
        vs.extend(self.constraints.iter().map(|c| c.var));
        vs
    }

    pub fn rewriter(&self) -> Rewriter {
        Rewriter::new(self.automata.iter().map(|a| a.nfa.clone()).collect())
    }

    pub fn root_state(&self) -> RewriteState {
        RewriteState::new(self.equation.clone(), self.constraints.iter().cloned())
    }

    pub fn parse(text: &str) -> Result<Problem, ParseError> {
        Parser::new(text).problem()
    }

    pub fn to_text(&self) -> String {
        let sig = &self.signature;
        let mut out = String::new();
        let letters: Vec<&str> = sig.letters.iter().map(String::as_str).collect();
        let vars: Vec<&str> = sig.vars.iter().map(String::as_str).collect();
        let _ = writeln!(out, "alphabet: {};", letters.join(" "));
        let _ = writeln!(out, "vars: {};", vars.join(" "));
        let side = |w: &Word| if w.is_empty() { "ε".to_string() } else { sig.fmt_word(w) };
        let _ = writeln!(out, "eq: {} = {}", side(&self.equation.lhs), side(&self.equation.rhs));
        for a in &self.automata {
            let _ = writeln!(out, "nfa \"{}\" {{", a.name);
            let _ = writeln!(
                out,
                "  states {}; init {}; final {};",
                a.nfa.num_states(),
                a.nfa.initial(),
                a.nfa.final_state()
            );
            let trans: Vec<String> =
                a.nfa.transitions().map(|(p, l, q)| format!("({p}, {}, {q})", sig.letter_name(l))).collect();
            if !trans.is_empty() {
                let _ = writeln!(out, "  trans {};", trans.join(" "));
            }
            out.push_str("}\n");
        }
        for c in &self.constraints {
            let _ = writeln!(
                out,
                "re: {} in nfa \"{}\" from {} to {};",
                sig.var_name(c.var),
                self.automata[c.nfa].name,
                c.from,
                c.to
            );
        }
        if !self.length_constraint.is_true() {
            let _ = writeln!(out, "phi: {}", fmt_phi(&self.length_constraint, sig));
        }
        out
    }
}

/// Infix rendering of a quantifier-free formula over `|x|` variables.
pub fn fmt_phi(f: &PadFormula, sig: &Signature) -> String {
    match f {
        PadFormula::And(v) if v.is_empty() => "true".into(),
        PadFormula::Or(v) if v.is_empty() => "false".into(),
        PadFormula::And(v) | PadFormula::Or(v) => {
            let op = if matches!(f, PadFormula::And(_)) { " && " } else { " || " };
            let parts: Vec<String> = v
                .iter()
                .map(|g| match g {
                    PadFormula::And(w) | PadFormula::Or(w) if !w.is_empty() => format!("({})", fmt_phi(g, sig)),
                    _ => fmt_phi(g, sig),
                })
                .collect();
            parts.join(op)
        }
        PadFormula::Atom(Atom::Leq(a, b)) => format!("{} <= {}", fmt_lin(a, sig), fmt_lin(b, sig)),
        PadFormula::Atom(Atom::Eq(a, b)) => format!("{} = {}", fmt_lin(a, sig), fmt_lin(b, sig)),
        PadFormula::Atom(Atom::Divides(a, b)) => format!("({}) divides ({})", fmt_lin(a, sig), fmt_lin(b, sig)),
        PadFormula::Exists(..) => format!("{f}"),
    }
}

fn fmt_lin(t: &LinearTerm, sig: &Signature) -> String {
    let name = |v: PadVar| match sig.vars.get(v.index()) {
        Some(n) => format!("|{n}|"),
        None => format!("v{}", v.0),
    };
    let mut out = String::new();
    let mut first = true;
    let mut push = |c: i64, body: Option<String>| {
        let (sign, mag) = if c < 0 { ("-", c.unsigned_abs()) } else { ("+", c as u64) };
        if first {
            if sign == "-" {
                out.push_str("- ");
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        first = false;
        match body {
            Some(b) if mag == 1 => out.push_str(&b),
            Some(b) => out.push_str(&format!("{mag}*{b}")),
            None => out.push_str(&mag.to_string()),
        }
    };
    for &(v, c) in t.coeffs() {
        push(c, Some(name(v)));
    }
    if t.constant_part() != 0 || t.coeffs().is_empty() {
        push(t.constant_part(), None);
    }
    out
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Punct(&'static str),
    Int(u64),
}

impl Parser {
    fn new(src: &str) -> Self {
        // Blank out comment lines so positions stay intact.
        let cleaned: String =
            src.lines().map(|l| if l.trim_start().starts_with('#') { "" } else { l }).collect::<Vec<_>>().join("\n");
        Parser { chars: cleaned.chars().collect(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    /// Skips blanks; newlines too when `lines` is set.
    fn skip(&mut self, lines: bool) {
        while let Some(c) = self.peek() {
            if c == '\n' && !lines {
                break;
            }
            if !c.is_whitespace() {
                break;
            }
            self.bump();
        }
    }

    fn at_statement_end(&mut self) -> bool {
        self.skip(false);
        matches!(self.peek(), None | Some('\n') | Some(';'))
    }

    fn end_statement(&mut self) -> Result<(), ParseError> {
        self.skip(false);
        match self.peek() {
            None | Some('\n') => Ok(()),
            Some(';') => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
        }
    }

    /// A run of characters that are neither blank nor structural.
    fn name(&mut self) -> Result<(String, usize, usize), ParseError> {
        self.skip(false);
        let (line, col) = (self.line, self.col);
        if self.peek() == Some('"') {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    Some('"') => break,
                    Some('\n') | None => return Err(self.err("unterminated string")),
                    Some(c) => s.push(c),
                }
            }
            return Ok((s, line, col));
        }
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || ";:{}(),=\"".contains(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        if s.is_empty() {
            return Err(self.err("expected a name"));
        }
        Ok((s, line, col))
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        self.skip(true);
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn number(&mut self) -> Result<usize, ParseError> {
        self.skip(true);
        let (s, line, col) = self.name()?;
        s.parse().map_err(|_| ParseError::Syntax { line, col, msg: format!("expected a number, found `{s}`") })
    }

    fn problem(&mut self) -> Result<Problem, ParseError> {
        let mut letters: Option<Vec<String>> = None;
        let mut vars: Option<Vec<String>> = None;
        let mut equation: Option<Equation> = None;
        let mut automata: Vec<NamedNfa> = Vec::new();
        let mut constraints = Vec::new();
        let mut phis = Vec::new();
        loop {
            self.skip(true);
            if self.peek().is_none() {
                break;
            }
            let (kw, line, col) = self.name()?;
            let need_sig = |l: &Option<Vec<String>>, v: &Option<Vec<String>>| -> Result<Signature, ParseError> {
                match (l, v) {
                    (Some(l), Some(v)) => Ok(Signature::new(l, v)),
                    _ => Err(ParseError::Syntax { line, col, msg: "`alphabet:` and `vars:` must come first".into() }),
                }
            };
            match kw.as_str() {
                "alphabet" | "vars" => {
                    self.expect(':')?;
                    let mut names = Vec::new();
                    while !self.at_statement_end() {
                        if self.peek() == Some(',') {
                            self.bump();
                            continue;
                        }
                        names.push(self.name()?.0);
                    }
                    self.end_statement()?;
                    if kw == "alphabet" {
                        letters = Some(names);
                    } else {
                        vars = Some(names);
                    }
                }
                "eq" => {
                    self.expect(':')?;
                    let sig = need_sig(&letters, &vars)?;
                    let lhs = self.side(&sig)?;
                    self.expect('=')?;
                    let rhs = self.side(&sig)?;
                    self.end_statement()?;
                    equation = Some(Equation::new(lhs, rhs));
                }
                "nfa" => {
                    let sig = need_sig(&letters, &vars)?;
                    automata.push(self.nfa(&sig)?);
                }
                "re" => {
                    self.expect(':')?;
                    let sig = need_sig(&letters, &vars)?;
                    constraints.push(self.constraint(&sig, &automata)?);
                }
                "phi" => {
                    self.expect(':')?;
                    let sig = need_sig(&letters, &vars)?;
                    phis.push(self.phi(&sig)?);
                    self.end_statement()?;
                }
                _ => return Err(ParseError::Syntax { line, col, msg: format!("unknown statement `{kw}`") }),
            }
        }
        let signature = need_sig_final(letters, vars, self)?;
        let equation = equation.ok_or_else(|| self.err("missing `eq:` statement"))?;
        Ok(Problem { signature, equation, automata, constraints, length_constraint: PadFormula::and(phis) })
    }

    fn side(&mut self, sig: &Signature) -> Result<Word, ParseError> {
        let mut symbols = Vec::new();
        loop {
            self.skip(false);
            match self.peek() {
                None | Some('\n') | Some(';') | Some('=') => break,
                _ => {}
            }
            let (s, line, col) = self.name()?;
            if s == "ε" {
                continue;
            }
            let sym = sig.symbol(&s).ok_or(ParseError::UnknownSymbol { line, col, name: s })?;
            symbols.push(sym);
        }
        Ok(Word::new(symbols))
    }

    fn nfa(&mut self, sig: &Signature) -> Result<NamedNfa, ParseError> {
        let (name, _, _) = self.name()?;
        self.expect('{')?;
        let (mut states, mut init, mut fin) = (None, None, None);
        let mut trans: Vec<(usize, Letter, usize)> = Vec::new();
        loop {
            self.skip(true);
            match self.peek() {
                Some('}') => {
                    self.bump();
                    break;
                }
                Some(';') => {
                    self.bump();
                    continue;
                }
                None => return Err(self.err("unterminated `nfa` block")),
                _ => {}
            }
            let (kw, line, col) = self.name()?;
            match kw.as_str() {
                "states" => states = Some(self.number()?),
                "init" => init = Some(self.number()?),
                "final" => fin = Some(self.number()?),
                "trans" => loop {
                    self.skip(true);
                    if self.peek() != Some('(') {
                        break;
                    }
                    self.bump();
                    let p = self.number()?;
                    self.expect(',')?;
                    self.skip(true);
                    let (l, lline, lcol) = self.name()?;
                    let letter = sig.letter(&l).ok_or_else(|| ParseError::AlphabetMismatch {
                        line: lline,
                        col: lcol,
                        name: name.clone(),
                        letter: l.clone(),
                    })?;
                    self.expect(',')?;
                    let q = self.number()?;
                    self.expect(')')?;
                    trans.push((p, letter, q));
                },
                _ => return Err(ParseError::Syntax { line, col, msg: format!("unknown nfa field `{kw}`") }),
            }
        }
        let missing = |f: &str| self.err(format!("nfa `{name}` lacks `{f}`"));
        let states = states.ok_or_else(|| missing("states"))?;
        let nfa = Nfa::from_transitions(
            sig.letters.len(),
            states,
            trans,
            init.ok_or_else(|| missing("init"))?,
            fin.ok_or_else(|| missing("final"))?,
        )
        .map_err(|e| self.err(format!("nfa `{name}`: {e}")))?;
        Ok(NamedNfa { name, nfa })
    }

    fn constraint(&mut self, sig: &Signature, automata: &[NamedNfa]) -> Result<RegularConstraint, ParseError> {
        let (v, line, col) = self.name()?;
        let var = sig.var(&v).ok_or(ParseError::UnknownSymbol { line, col, name: v })?;
        for kw in ["in", "nfa"] {
            let (w, line, col) = self.name()?;
            if w != kw {
                return Err(ParseError::Syntax { line, col, msg: format!("expected `{kw}`") });
            }
        }
        let (n, line, col) = self.name()?;
        let index =
            automata.iter().position(|a| a.name == n).ok_or(ParseError::UnknownSymbol { line, col, name: n })?;
        let nfa = &automata[index].nfa;
        let (mut from, mut to) = (nfa.initial(), nfa.final_state());
        while !self.at_statement_end() {
            let (kw, line, col) = self.name()?;
            let n = self.number()?;
            if n >= nfa.num_states() {
                return Err(ParseError::Syntax { line, col, msg: format!("state {n} out of range") });
            }
            match kw.as_str() {
                "from" => from = n,
                "to" => to = n,
                _ => {
                    return Err(ParseError::Syntax { line, col, msg: format!("expected `from` or `to`, found `{kw}`") })
                }
            }
        }
        self.end_statement()?;
        Ok(RegularConstraint::new(var, index, from, to))
    }

    fn phi(&mut self, sig: &Signature) -> Result<PadFormula, ParseError> {
        let mut toks = Vec::new();
        loop {
            self.skip(false);
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            if c == '\n' || c == ';' {
                break;
            }
            let two: String = self.chars[self.pos..].iter().take(2).collect();
            let tok = if let Some(p) = ["&&", "||", "<=", ">=", "==", "!="].into_iter().find(|p| *p == two) {
                self.bump();
                self.bump();
                Tok::Punct(p)
            } else if let Some(p) = ["<", ">", "=", "|", "(", ")", "+", "-", "*"].into_iter().find(|p| p.starts_with(c))
            {
                self.bump();
                Tok::Punct(p)
            } else if c.is_ascii_digit() {
                let mut n = String::new();
                while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                    n.push(d);
                    self.bump();
                }
                Tok::Int(n.parse().map_err(|_| self.err("number too large"))?)
            } else {
                let mut s = String::new();
                while let Some(d) = self.peek() {
                    if d.is_whitespace() || "&|<>=!()+-*;".contains(d) {
                        break;
                    }
                    s.push(d);
                    self.bump();
                }
                if s.is_empty() {
                    return Err(self.err(format!("unexpected `{c}`")));
                }
                Tok::Word(s)
            };
            toks.push((tok, line, col));
        }
        let mut p = PhiParser { toks, pos: 0, sig, end: (self.line, self.col) };
        let f = p.or()?;
        if p.pos < p.toks.len() {
            return Err(p.err("unexpected token"));
        }
        Ok(f)
    }
}

fn need_sig_final(l: Option<Vec<String>>, v: Option<Vec<String>>, p: &Parser) -> Result<Signature, ParseError> {
    match (l, v) {
        (Some(l), Some(v)) => Ok(Signature::new(&l, &v)),
        _ => Err(p.err("missing `alphabet:` or `vars:`")),
    }
}

struct PhiParser<'s> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    sig: &'s Signature,
    end: (usize, usize),
}

impl PhiParser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        let (line, col) = self.toks.get(self.pos).map(|t| (t.1, t.2)).unwrap_or(self.end);
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<PadFormula, ParseError> {
        let mut parts = vec![self.and()?];
        while self.eat("||") {
            parts.push(self.and()?);
        }
        Ok(PadFormula::or(parts))
    }

    fn and(&mut self) -> Result<PadFormula, ParseError> {
        let mut parts = vec![self.primary()?];
        while self.eat("&&") {
            parts.push(self.primary()?);
        }
        Ok(PadFormula::and(parts))
    }

    fn primary(&mut self) -> Result<PadFormula, ParseError> {
        if self.eat("(") {
            let f = self.or()?;
            if !self.eat(")") {
                return Err(self.err("expected `)`"));
            }
            return Ok(f);
        }
        if let Some(Tok::Word(w)) = self.peek() {
            let f = match w.as_str() {
                "true" => Some(PadFormula::tt()),
                "false" => Some(PadFormula::ff()),
                _ => None,
            };
            if let Some(f) = f {
                self.pos += 1;
                return Ok(f);
            }
        }
        let a = self.sum()?;
        let op = match self.peek() {
            Some(Tok::Punct(p)) if ["<=", "<", "=", "==", ">=", ">", "!="].contains(p) => *p,
            _ => return Err(self.err("expected a comparison")),
        };
        self.pos += 1;
        let b = self.sum()?;
        Ok(match op {
            "<=" => PadFormula::leq(a, b),
            "<" => PadFormula::lt(a, b),
            ">=" => PadFormula::geq(a, b),
            ">" => PadFormula::gt(a, b),
            "!=" => PadFormula::neq(a, b),
            _ => PadFormula::eq(a, b),
        })
    }

    fn sum(&mut self) -> Result<LinearTerm, ParseError> {
        let mut t = if self.eat("-") { -self.product()? } else { self.product()? };
        loop {
            if self.eat("+") {
                t = t + self.product()?;
            } else if self.eat("-") {
                t = t - self.product()?;
            } else {
                return Ok(t);
            }
        }
    }

    fn product(&mut self) -> Result<LinearTerm, ParseError> {
        if let Some(Tok::Int(n)) = self.peek() {
            let n = i64::try_from(*n).map_err(|_| self.err("number too large"))?;
            self.pos += 1;
            let explicit = self.eat("*");
            if explicit || matches!(self.peek(), Some(Tok::Punct("|"))) {
                return Ok(self.length()? * n);
            }
            return Ok(LinearTerm::constant(n));
        }
        self.length()
    }

    fn length(&mut self) -> Result<LinearTerm, ParseError> {
        if !self.eat("|") {
            return Err(self.err("expected a number or `|var|`"));
        }
        let (name, line, col) = match self.toks.get(self.pos) {
            Some((Tok::Word(w), l, c)) => (w.clone(), *l, *c),
            _ => return Err(self.err("expected a variable")),
        };
        self.pos += 1;
        let v = self.sig.var(&name).ok_or(ParseError::UnknownSymbol { line, col, name })?;
        if !self.eat("|") {
            return Err(self.err("expected `|`"));
        }
        Ok(LinearTerm::var(length_var(v)))
    }
}
