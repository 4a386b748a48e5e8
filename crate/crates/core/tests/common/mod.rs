//! Seeded random corpora shared by the integration tests and the acceptance
//! run.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weq::pad::{LinearTerm, PadFormula};
use weq::problem::{length_var, Problem};
use weq::{Equation, LengthVector, Letter, Nfa, Signature, Symbol, Var, Word};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn signature() -> Signature {
    Signature::new(&["a", "b"], &["x", "y", "z"])
}

fn constant(rng: &mut ChaCha8Rng) -> Symbol {
    Symbol::Const(Letter(rng.gen_range(0..2)))
}

/// Shuffles `vars` into a side with random constants, at most `max` long.
fn side(rng: &mut ChaCha8Rng, vars: &[Var], max: usize) -> Vec<Symbol> {
    let room = max - vars.len();
    let consts = rng.gen_range(0..=room.min(3));
    let mut out: Vec<Symbol> = vars.iter().map(|&v| Symbol::Var(v)).collect();
    for _ in 0..consts {
        let at = rng.gen_range(0..=out.len());
        out.insert(at, constant(rng));
    }
    out
}

/// A quadratic equation over at most three variables and at most eight
/// symbols per side.
pub fn quadratic(rng: &mut ChaCha8Rng) -> Equation {
    loop {
        let n = rng.gen_range(1..=3u16);
        let mut occ: Vec<Var> = Vec::new();
        for v in 0..n {
            for _ in 0..rng.gen_range(1..=2) {
                occ.push(Var(v));
            }
        }
        occ.shuffle(rng);
        let cut = rng.gen_range(0..=occ.len());
        let (l, r) = occ.split_at(cut);
        if l.len() > 6 || r.len() > 6 {
            continue;
        }
        let mut lhs = side(rng, l, 8);
        let mut rhs = side(rng, r, 8);
        lhs.shuffle(rng);
        rhs.shuffle(rng);
        let e = Equation::new(Word::new(lhs), Word::new(rhs));
        if e.is_quadratic() && !e.is_trivial() {
            return e;
        }
    }
}

/// A regular-oriented equation: each variable at most once per side, in
/// the same relative order on both sides.
pub fn regular_oriented(rng: &mut ChaCha8Rng) -> Equation {
    loop {
        let n = rng.gen_range(1..=3u16);
        let vars: Vec<Var> = (0..n).map(Var).collect();
        let pick = |rng: &mut ChaCha8Rng| -> Vec<Var> { vars.iter().copied().filter(|_| rng.gen_bool(0.75)).collect() };
        let (l, r) = (pick(rng), pick(rng));
        let e = Equation::new(Word::new(side(rng, &l, 8)), Word::new(side(rng, &r, 8)));
        if e.variables().len() == n as usize && e.is_regular() && e.is_oriented() && !e.is_trivial() {
            return e;
        }
    }
}

/// Like [`regular_oriented`], but keeps unsolvable draws only with
/// probability `keep_unsat`, so the corpus is not dominated by equations
/// that fail on their constants.
pub fn regular_oriented_mixed(rng: &mut ChaCha8Rng, keep_unsat: f64) -> Equation {
    loop {
        let e = regular_oriented(rng);
        let solvable = weq::nielsen::Rewriter::default()
            .is_solvable(weq::nielsen::RewriteState::unconstrained(e.clone()), 100_000)
            .unwrap_or(true);
        if solvable || rng.gen_bool(keep_unsat) {
            return e;
        }
    }
}

/// A 1-weak automaton over `{a, b}` with at most three states: transitions
/// only go forward in state order, plus self-loops.
pub fn one_weak_nfa(rng: &mut ChaCha8Rng) -> Nfa {
    loop {
        let n = rng.gen_range(1..=3usize);
        let mut trans = Vec::new();
        for p in 0..n {
            for q in p..n {
                for a in 0..2u16 {
                    if rng.gen_bool(if p == q { 0.4 } else { 0.5 }) {
                        trans.push((p, Letter(a), q));
                    }
                }
            }
        }
        let nfa = Nfa::from_transitions(2, n, trans, 0, n - 1).expect("valid automaton");
        if !nfa.is_empty_language() {
            debug_assert!(nfa.is_one_weak());
            return nfa;
        }
    }
}

/// Attaches one or two random 1-weak constraints.
pub fn constrain(rng: &mut ChaCha8Rng, p: &mut Problem) {
    let vars: Vec<Var> = p.equation.variables().into_iter().collect();
    let k = rng.gen_range(1..=vars.len().min(2));
    for &v in vars.choose_multiple(rng, k) {
        let i = p.add_automaton(format!("w{}", p.automata.len()), one_weak_nfa(rng));
        p.constrain(v, i);
    }
}

pub fn problem(e: Equation) -> Problem {
    Problem::new(signature(), e)
}

/// `Φ` bounding every variable of `p` by at most `max`, with an extra
/// random linear side condition.
pub fn box_constraint(rng: &mut ChaCha8Rng, p: &Problem, max: i64) -> PadFormula {
    let vars: Vec<Var> = p.variables().into_iter().collect();
    let len = |v: Var| LinearTerm::var(length_var(v));
    let mut parts = Vec::new();
    for &v in &vars {
        let hi = rng.gen_range(0..=max);
        let lo = rng.gen_range(0..=hi);
        parts.push(PadFormula::leq(len(v), hi));
        parts.push(PadFormula::geq(len(v), lo));
    }
    if vars.len() >= 2 && rng.gen_bool(0.5) {
        let (a, b) = (vars[0], vars[1]);
        parts.push(match rng.gen_range(0..3) {
            0 => PadFormula::eq(len(a), len(b)),
            1 => PadFormula::leq(len(a) + LinearTerm::constant(1), len(b)),
            _ => PadFormula::neq(len(a), len(b) * 2),
        });
    }
    PadFormula::and(parts)
}

/// All vectors in `[0, max]^n`.
pub fn grid(n: usize, max: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|p: Vec<u64>| (0..=max).map(move |k| [p.clone(), vec![k]].concat())).collect();
    }
    out
}

/// `lhs = rhs` over `{a, b}` with variables `x, y, z`.
pub fn plain(lhs: &str, rhs: &str) -> Problem {
    problem(signature().equation(lhs, rhs).expect("well-formed equation"))
}

/// `lhs = rhs` over `{a, b, #}` with `x, y ∈ #(a+b)*`.
pub fn hash_problem(lhs: &str, rhs: &str) -> Problem {
    let sig = Signature::new(&["a", "b", "#"], &["x", "y", "z"]);
    let e = sig.equation(lhs, rhs).expect("well-formed equation");
    let mut p = Problem::new(sig, e);
    let hash = Nfa::from_transitions(3, 2, [(0, Letter(2), 1), (1, Letter(0), 1), (1, Letter(1), 1)], 0, 1)
        .expect("valid automaton");
    let i = p.add_automaton("hash_ab", hash);
    p.constrain(Var(0), i);
    p.constrain(Var(1), i);
    p
}

/// Length vectors over the variables of `p` in `[0, max]^V`.
pub fn length_grid(p: &Problem, max: u64) -> Vec<LengthVector> {
    let vars: Vec<Var> = p.variables().into_iter().collect();
    grid(vars.len(), max).into_iter().map(|vals| LengthVector(vars.iter().copied().zip(vals).collect())).collect()
}

/// The valuation `|v| ↦ n` of a length vector.
pub fn valuation(lv: &LengthVector) -> weq::pad::Valuation {
    lv.0.iter().map(|(&v, &n)| (length_var(v), n)).collect()
}
