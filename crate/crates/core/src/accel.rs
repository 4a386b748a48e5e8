//! Closed-form reachability for 1-variable-reducing cycles and for flat
//! counter systems.
//!
//! One pass around a cycle reducing `y` subtracts `f = Σ αᵢ`, where `αᵢ`
//! is `1` for `Dec(y)` and `x` for `Sub(y,x)`; the other counters never
//! change, so `f` is fixed along a run and `k` passes give `y' = y − k·f`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::automata::UnarySemilinear;
use crate::counter::{cycle_shape, CounterSystem, RelationKind, TransitionRelation};
use crate::graph;
use crate::pad::{lower_unary_membership, LinearTerm, PadFormula, PadVar, VarPool};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccelError {
    #[error("cycle is not 1-variable-reducing")]
    NotOneVarReducing { cycle: Vec<usize> },
    #[error("cycle carries guards; use the guarded acceleration")]
    Guarded,
    #[error("counter system is not flat")]
    NotFlat,
    #[error("transitions do not form a path")]
    NotAPath,
}

/// How often each decrement occurs in one pass around a cycle.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecrementMultiset {
    /// Number of `Dec` steps.
    pub unit_count: u64,
    /// Number of `Sub(y, x)` steps per `x`.
    pub var_counts: BTreeMap<usize, u64>,
}

impl DecrementMultiset {
    pub fn of<'a>(kinds: impl IntoIterator<Item = &'a RelationKind>) -> Self {
        let mut m = DecrementMultiset::default();
        for k in kinds {
            match *k {
                RelationKind::Dec(_) => m.unit_count += 1,
                RelationKind::Sub { z, .. } => *m.var_counts.entry(z).or_default() += 1,
                RelationKind::Id | RelationKind::EraseTest(_) => {}
            }
        }
        m
    }

    pub fn len(&self) -> u64 {
        self.unit_count + self.var_counts.values().sum::<u64>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `unit_count + Σ count(x)·x` over the given counter variables.
    pub fn term(&self, vars: &[PadVar]) -> LinearTerm {
        LinearTerm::from_parts(self.var_counts.iter().map(|(&x, &n)| (vars[x], n as i64)), self.unit_count as i64)
    }
}

fn var(v: PadVar) -> LinearTerm {
    LinearTerm::var(v)
}

/// `post_i = pre_i` for every counter except `skip`.
pub fn frame(pre: &[PadVar], post: &[PadVar], skip: Option<usize>) -> PadFormula {
    PadFormula::and((0..pre.len()).filter(|&i| Some(i) != skip).map(|i| PadFormula::eq(var(post[i]), var(pre[i]))))
}

/// One transition as a formula over `(pre, post)`, guards included.
pub fn relation_formula(r: &TransitionRelation, pre: &[PadVar], post: &[PadVar]) -> PadFormula {
    let mut parts: Vec<PadFormula> =
        r.pre_guards.iter().map(|(c, u)| lower_unary_membership(&var(pre[*c]), u)).collect();
    match r.kind {
        RelationKind::Id => parts.push(frame(pre, post, None)),
        RelationKind::Sub { y, z } => {
            parts.push(PadFormula::geq(var(pre[z]), 1));
            parts.push(PadFormula::leq(var(pre[z]), var(pre[y])));
            parts.push(PadFormula::eq(var(post[y]), var(pre[y]) - var(pre[z])));
            parts.push(frame(pre, post, Some(y)));
        }
        RelationKind::Dec(y) => {
            parts.push(PadFormula::geq(var(pre[y]), 1));
            parts.push(PadFormula::eq(var(post[y]) + LinearTerm::constant(1), var(pre[y])));
            parts.push(frame(pre, post, Some(y)));
        }
        RelationKind::EraseTest(y) => {
            parts.push(PadFormula::eq(var(pre[y]), 0));
            parts.push(frame(pre, post, None));
        }
    }
    parts.extend(r.post_guards.iter().map(|(c, u)| lower_unary_membership(&var(post[*c]), u)));
    PadFormula::and(parts)
}

fn shape(cycle: &[TransitionRelation]) -> Result<usize, AccelError> {
    cycle_shape(cycle.iter().map(|r| &r.kind))
        .ok_or(AccelError::NotOneVarReducing { cycle: (0..cycle.len()).collect() })
}

/// Counters that some `Sub` step of the cycle subtracts.
fn sub_vars(cycle: &[TransitionRelation]) -> BTreeSet<usize> {
    cycle
        .iter()
        .filter_map(|r| match r.kind {
            RelationKind::Sub { z, .. } => Some(z),
            _ => None,
        })
        .collect()
}

/// Any number of passes around an unguarded cycle:
/// `f | (y − y') ∧ y' ≤ y ∧ frame`, plus `y' = y ∨ ⋀ z ≥ 1` over the
/// subtracted counters, because a `Sub` step needs a nonempty prefix.
pub fn accelerate_cycle(
    cycle: &[TransitionRelation],
    pre: &[PadVar],
    post: &[PadVar],
) -> Result<PadFormula, AccelError> {
    let y = shape(cycle)?;
    if cycle.iter().any(TransitionRelation::is_guarded) {
        return Err(AccelError::Guarded);
    }
    let f = DecrementMultiset::of(cycle.iter().map(|r| &r.kind)).term(pre);
    let nonempty = PadFormula::and(sub_vars(cycle).into_iter().map(|z| PadFormula::geq(var(pre[z]), 1)));
    Ok(PadFormula::and([
        PadFormula::divides(f, var(pre[y]) - var(post[y])),
        PadFormula::leq(var(post[y]), var(pre[y])),
        frame(pre, post, Some(y)),
        PadFormula::or([PadFormula::eq(var(post[y]), var(pre[y])), nonempty]),
    ]))
}

/// Guarded acceleration
/// `λ = (x̄' = x̄) ∨ (f | y − y' ∧ y' + f ≤ y ∧ frame ∧ ψ ∧ η̂)`.
///
/// A guard on `y` at a position with offset `c` (what is still to be
/// subtracted in that pass) must hold at `y' + s·f + c` for every pass
/// `s < k`. Past `a + |A'| + 1` passes the values are periodic modulo the
/// guard's period by pigeonhole, so the conjunction stops there.
pub fn accelerate_cycle_guarded(
    cycle: &[TransitionRelation],
    pre: &[PadVar],
    post: &[PadVar],
) -> Result<PadFormula, AccelError> {
    accelerate_guarded_with(cycle, pre, post, expansion_bound)
}

/// [`accelerate_cycle_guarded`] with `extra` more expansion steps per guard
/// than needed.
pub fn accelerate_cycle_guarded_with_extra(
    cycle: &[TransitionRelation],
    pre: &[PadVar],
    post: &[PadVar],
    extra: u64,
) -> Result<PadFormula, AccelError> {
    accelerate_guarded_with(cycle, pre, post, |u| expansion_bound(u) + extra)
}

/// `a + |A'| + 1`, with `a = max A` or `−1` when `A` is empty.
pub fn expansion_bound(u: &UnarySemilinear) -> u64 {
    let n = u.periodic().len() as u64;
    match u.finite().iter().max() {
        Some(&a) => a + n + 1,
        None => n,
    }
}

fn accelerate_guarded_with(
    cycle: &[TransitionRelation],
    pre: &[PadVar],
    post: &[PadVar],
    bound: impl Fn(&UnarySemilinear) -> u64,
) -> Result<PadFormula, AccelError> {
    let y = shape(cycle)?;
    let (py, qy) = (var(pre[y]), var(post[y]));
    let alphas: Vec<LinearTerm> = cycle
        .iter()
        .map(|r| match r.kind {
            RelationKind::Sub { z, .. } => var(pre[z]),
            _ => LinearTerm::constant(1),
        })
        .collect();
    let f = alphas.iter().cloned().fold(LinearTerm::constant(0), |a, b| a + b);
    let mut prefix = vec![LinearTerm::constant(0)];
    for a in &alphas {
        let next = prefix.last().expect("nonempty").clone() + a.clone();
        prefix.push(next);
    }

    let mut parts = vec![
        PadFormula::divides(f.clone(), py.clone() - qy.clone()),
        PadFormula::leq(qy.clone() + f.clone(), py.clone()),
        frame(pre, post, Some(y)),
    ];
    parts.extend(sub_vars(cycle).into_iter().map(|z| PadFormula::geq(var(pre[z]), 1)));

    let mut other: BTreeSet<(usize, UnarySemilinear)> = BTreeSet::new();
    let mut on_y: BTreeSet<(LinearTerm, UnarySemilinear)> = BTreeSet::new();
    for (j, r) in cycle.iter().enumerate() {
        for (guards, offset) in [(&r.pre_guards, &prefix[j]), (&r.post_guards, &prefix[j + 1])] {
            for (c, u) in guards {
                if *c == y {
                    on_y.insert((f.clone() - offset.clone(), u.clone()));
                } else {
                    // Counters other than y keep their value for the whole run.
                    other.insert((*c, u.clone()));
                }
            }
        }
    }
    parts.extend(other.iter().map(|(c, u)| lower_unary_membership(&var(pre[*c]), u)));
    for (offset, u) in &on_y {
        for s in 0..=bound(u) {
            let s = s as i64;
            // Pass s exists iff y' + (s+1)·f ≤ y.
            let past_end = PadFormula::leq(py.clone() + LinearTerm::constant(1), qy.clone() + f.clone() * (s + 1));
            let value = qy.clone() + f.clone() * s + offset.clone();
            parts.push(PadFormula::or([past_end, lower_unary_membership(&value, u)]));
        }
    }
    Ok(PadFormula::or([frame(pre, post, None), PadFormula::and(parts)]))
}

/// A path through the control graph with cycles pumped at their entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchemaStep {
    Segment(Vec<usize>),
    /// A simple cycle (transition indices) starting and ending at the
    /// current state.
    Pump(Vec<usize>),
}

pub type PathSchema = Vec<SchemaStep>;

/// Relational composition of the given transitions.
pub fn path_formula(
    cs: &CounterSystem,
    segment: &[usize],
    pre: &[PadVar],
    post: &[PadVar],
    pool: &mut VarPool,
) -> Result<PadFormula, AccelError> {
    if segment.windows(2).any(|w| cs.transitions[w[0]].target != cs.transitions[w[1]].source) {
        return Err(AccelError::NotAPath);
    }
    let relations: Vec<Rel> = segment.iter().map(|&t| Rel::Step(&cs.transitions[t].relation)).collect();
    compose(&relations, pre, post, pool)
}

enum Rel<'a> {
    Step(&'a TransitionRelation),
    Pump(Vec<TransitionRelation>),
}

fn compose(rels: &[Rel], pre: &[PadVar], post: &[PadVar], pool: &mut VarPool) -> Result<PadFormula, AccelError> {
    if rels.is_empty() {
        return Ok(frame(pre, post, None));
    }
    let mut vectors = vec![pre.to_vec()];
    let mut bound = Vec::new();
    for i in 1..rels.len() {
        let z = pool.fresh_vec(&format!("z{i}_"), pre.len());
        bound.extend(z.iter().copied());
        vectors.push(z);
    }
    vectors.push(post.to_vec());
    let mut parts = Vec::new();
    for (i, r) in rels.iter().enumerate() {
        let (a, b) = (&vectors[i], &vectors[i + 1]);
        parts.push(match r {
            Rel::Step(t) => relation_formula(t, a, b),
            Rel::Pump(cycle) => accelerate_cycle_guarded(cycle, a, b)?,
        });
    }
    Ok(PadFormula::exists(bound, PadFormula::and(parts)))
}

/// All path schemas from `p` to `q` in a flat system whose cycles are all
/// 1-variable-reducing.
pub fn path_schemas(cs: &CounterSystem, p: usize, q: usize) -> Result<Vec<PathSchema>, AccelError> {
    let flat = cs.flatness();
    if !flat.flat {
        return Err(AccelError::NotFlat);
    }
    // Cycle through each state, rotated to start there.
    let mut cycle_at: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for cycle in &flat.cycles {
        if cs.cycle_shape(cycle).ok().flatten().is_none() {
            return Err(AccelError::NotOneVarReducing { cycle: cycle.clone() });
        }
        for k in 0..cycle.len() {
            let mut rotated = cycle[k..].to_vec();
            rotated.extend_from_slice(&cycle[..k]);
            cycle_at.insert(cs.transitions[cycle[k]].source, rotated);
        }
    }
    let succ: Vec<Vec<usize>> =
        cs.out.iter().map(|ts| ts.iter().map(|&t| cs.transitions[t].target).collect()).collect();
    let comps = graph::strongly_connected_components(&succ);
    let comp = graph::component_ids(&comps, cs.states.len());
    let mut pred = vec![Vec::new(); cs.states.len()];
    for t in &cs.transitions {
        pred[t.target].push(t.source);
    }
    let useful = graph::reachable(&pred, q);

    let mut schemas = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    let mut visited = vec![false; cs.states.len()];
    visited[p] = true;
    walk(cs, p, q, &useful, &mut visited, &mut path, &mut schemas);

    Ok(schemas
        .into_iter()
        .map(|transitions| {
            let mut steps = Vec::new();
            let mut segment = Vec::new();
            let mut at = p;
            let mut entered: Option<usize> = None;
            let flush_pump = |at: usize, segment: &mut Vec<usize>, steps: &mut Vec<SchemaStep>| {
                if let Some(c) = cycle_at.get(&at) {
                    if !segment.is_empty() {
                        steps.push(SchemaStep::Segment(std::mem::take(segment)));
                    }
                    steps.push(SchemaStep::Pump(c.clone()));
                }
            };
            for &t in &transitions {
                if entered != Some(comp[at]) {
                    entered = Some(comp[at]);
                    flush_pump(at, &mut segment, &mut steps);
                }
                segment.push(t);
                at = cs.transitions[t].target;
            }
            if entered != Some(comp[at]) {
                flush_pump(at, &mut segment, &mut steps);
            }
            if !segment.is_empty() {
                steps.push(SchemaStep::Segment(segment));
            }
            steps
        })
        .collect())
}

fn walk(
    cs: &CounterSystem,
    at: usize,
    q: usize,
    useful: &[bool],
    visited: &mut [bool],
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if at == q {
        out.push(path.clone());
        return;
    }
    for &t in &cs.out[at] {
        let next = cs.transitions[t].target;
        if visited[next] || !useful[next] {
            continue;
        }
        visited[next] = true;
        path.push(t);
        walk(cs, next, q, useful, visited, path, out);
        path.pop();
        visited[next] = false;
    }
}

/// `λ_{p,q}(pre, post)`: the disjunction over all path schemas.
pub fn flat_reachability(
    cs: &CounterSystem,
    p: usize,
    q: usize,
    pre: &[PadVar],
    post: &[PadVar],
    pool: &mut VarPool,
) -> Result<PadFormula, AccelError> {
    let schemas = path_schemas(cs, p, q)?;
    let mut disjuncts = Vec::with_capacity(schemas.len());
    for schema in schemas {
        let mut rels = Vec::new();
        for step in schema {
            match step {
                SchemaStep::Segment(ts) => rels.extend(ts.iter().map(|&t| Rel::Step(&cs.transitions[t].relation))),
                SchemaStep::Pump(ts) => {
                    rels.push(Rel::Pump(ts.iter().map(|&t| cs.transitions[t].relation.clone()).collect()))
                }
            }
        }
        disjuncts.push(compose(&rels, pre, post, pool)?);
    }
    Ok(PadFormula::or(disjuncts))
}
