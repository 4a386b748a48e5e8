mod common;

use weq::oracle::{reference_formula, Oracle};
use weq::pad::{evaluate, LinearTerm, PadFormula, PadVar};
use weq::problem::Problem;
use weq::solver::Solver;

/// Length membership agrees with the oracle on `[0, max]^V`.
fn agrees_with_oracle(p: &Problem, max: u64) {
    let solver = Solver::new(p).unwrap();
    let mut membership = solver.membership();
    let oracle = Oracle::new(p);
    for lv in common::length_grid(p, max) {
        assert_eq!(membership.check(&lv).unwrap(), oracle.membership(&lv).unwrap(), "{}\nat {lv:?}", p.to_text());
    }
}

/// Length membership agrees with `f` on `[0, max]^V`.
fn matches_formula(p: &Problem, f: &PadFormula, max: u64) {
    let solver = Solver::new(p).unwrap();
    let mut membership = solver.membership();
    for lv in common::length_grid(p, max) {
        assert_eq!(membership.check(&lv).unwrap(), evaluate(f, &common::valuation(&lv)).unwrap(), "at {lv:?}");
    }
}

#[test]
fn gcd_characterization_of_the_swap_equation() {
    let p = common::plain("x a b y", "y a b x");
    matches_formula(&p, &reference_formula("lemma1").unwrap(), 10);
    agrees_with_oracle(&p, 8);
}

#[test]
fn prefix_equation_fixes_one_difference() {
    let p = common::plain("x a b y", "y z");
    let (x, z) = (LinearTerm::var(PadVar(0)), LinearTerm::var(PadVar(2)));
    matches_formula(&p, &PadFormula::eq(z, x + LinearTerm::constant(2)), 6);
}

#[test]
fn marker_conjugates_are_divisible() {
    let p = common::hash_problem("x z", "z y");
    matches_formula(&p, &reference_formula("prop4").unwrap(), 7);
    agrees_with_oracle(&p, 5);
}

#[test]
fn marker_prefixes_bound_the_middle() {
    let p = common::hash_problem("x y", "y z");
    let v = |i| LinearTerm::var(PadVar(i));
    let f = PadFormula::and([PadFormula::eq(v(0), v(2)), PadFormula::geq(v(1), 1), PadFormula::leq(v(1), v(0))]);
    matches_formula(&p, &f, 6);
}

#[test]
fn random_quadratic_equations_agree_with_the_oracle() {
    let mut rng = common::rng(41);
    for _ in 0..20 {
        agrees_with_oracle(&common::problem(common::quadratic(&mut rng)), 4);
    }
    for _ in 0..6 {
        let mut p = common::problem(common::quadratic(&mut rng));
        common::constrain(&mut rng, &mut p);
        agrees_with_oracle(&p, 4);
    }
}
