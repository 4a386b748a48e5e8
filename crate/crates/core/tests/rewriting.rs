mod common;

use rand::seq::SliceRandom;
use rand::Rng;

use weq::counter::{CounterSystem, RelationKind};
use weq::nielsen::{RewriteState, Rewriter};
use weq::oracle::enumerate_solutions;
use weq::solver::Solver;
use weq::LengthVector;

/// Oracle-solvable equations are solvable by rewriting, and solvable ones
/// come with a checked witness.
#[test]
fn solvability_agrees_with_the_oracle() {
    let mut rng = common::rng(11);
    let (mut both, mut neither) = (0, 0);
    for _ in 0..60 {
        let e = common::quadratic(&mut rng);
        let p = common::problem(e.clone());
        let solvable = Rewriter::default().is_solvable(RewriteState::unconstrained(e.clone()), 200_000).unwrap();
        let found = enumerate_solutions(&p, 4).unwrap();
        if !found.is_empty() {
            assert!(solvable, "{e}: oracle found {found:?}");
        }
        if solvable {
            // Some small length vector must admit a witness.
            let s = Solver::new(&p).unwrap();
            let vars: Vec<_> = p.variables().into_iter().collect();
            let hit = common::grid(vars.len(), 6).into_iter().find_map(|vals| {
                let lv = LengthVector(vars.iter().copied().zip(vals).collect());
                s.length_membership(&lv).unwrap().then_some(lv)
            });
            if let Some(lv) = hit {
                let w = s.synthesize_witness(&lv).unwrap();
                assert!(w.check_solution(&e).unwrap(), "{e}");
                both += 1;
            }
        } else {
            neither += 1;
        }
    }
    assert!(both > 5 && neither > 5, "corpus too one-sided: {both} solvable, {neither} not");
}

/// Rewriting keeps regular-oriented equations regular-oriented.
#[test]
fn regular_oriented_is_closed_under_rewriting() {
    let mut rng = common::rng(12);
    for _ in 0..100 {
        let e = common::regular_oriented(&mut rng);
        let g = Rewriter::default().build_graph(RewriteState::unconstrained(e.clone()), 100_000).unwrap();
        for n in &g.nodes {
            assert!(n.equation.is_regular() && n.equation.is_oriented(), "{e} reaches {}", n.equation);
        }
    }
}

/// `(Σ counters, |E|)` decreases at every step of random runs.
#[test]
fn runs_decrease_the_termination_measure() {
    let mut rng = common::rng(13);
    let systems: Vec<CounterSystem> =
        (0..20).map(|_| CounterSystem::build(&common::quadratic(&mut rng), 100_000).unwrap()).collect();
    for _ in 0..2000 {
        let cs = systems.choose(&mut rng).unwrap();
        let mut values: Vec<u64> = (0..cs.counters.len()).map(|_| rng.gen_range(0..8)).collect();
        let mut state = cs.root();
        let bound = values.iter().sum::<u64>() as usize + cs.states[state].equation.size();
        let mut steps = 0;
        loop {
            let enabled: Vec<(usize, Vec<u64>)> = cs.out[state]
                .iter()
                .filter_map(|&t| cs.transitions[t].relation.apply(&values).map(|v| (t, v)))
                .collect();
            let Some((t, next)) = enabled.choose(&mut rng).cloned() else { break };
            let target = cs.transitions[t].target;
            let before = (values.iter().sum::<u64>(), cs.states[state].equation.size());
            let after = (next.iter().sum::<u64>(), cs.states[target].equation.size());
            assert!(after < before, "{:?}: {before:?} -> {after:?}", cs.transitions[t].relation.kind);
            if matches!(cs.transitions[t].relation.kind, RelationKind::Sub { .. } | RelationKind::Dec(_)) {
                assert!(after.0 < before.0);
            }
            values = next;
            state = target;
            steps += 1;
        }
        assert!(steps <= bound);
    }
}
