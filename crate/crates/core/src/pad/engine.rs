//! Bounded constraint search for PAD formulas.
//!
//! Binders are renamed apart and dropped, leaving a positive Boolean
//! combination of atoms over dense variable indices. The search expands
//! disjunctions lazily, propagates interval bounds through linear atoms
//! and labels variables smallest-domain first. Upper bounds that do not
//! follow from the formula are never invented during propagation; only
//! labeling enumerates a variable up to the current cap, and doing so
//! marks the run inexact. An exhausted run that never hit the cap (or the
//! step limit) proves unsatisfiability.

use std::collections::{BTreeSet, HashMap};

use super::{divides, Atom, LinearTerm, PadFormula, PadVar, Valuation};

/// Caps tried in order before giving up.
pub const BOUND_SCHEDULE: [u64; 4] = [16, 64, 256, 1024];

const STEP_LIMIT: u64 = 2_000_000;
const PROPAGATION_ROUNDS: usize = 64;
const INF: i128 = i128::MAX / 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// A model of the free variables, verified by evaluation.
    Sat(Valuation),
    Unsat,
    /// Inconclusive up to the given cap.
    Unknown(u64),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// `Σ cᵢ·xᵢ + k` over dense indices.
#[derive(Clone, Debug)]
struct Lin {
    terms: Vec<(usize, i128)>,
    k: i128,
}

impl Lin {
    fn negate(&self) -> Lin {
        Lin { terms: self.terms.iter().map(|&(i, c)| (i, -c)).collect(), k: -self.k }
    }

    /// Range over the box, `None` meaning unbounded.
    fn range(&self, dom: &Dom) -> (Option<i128>, Option<i128>) {
        let (mut lo, mut hi) = (Some(self.k), Some(self.k));
        for &(i, c) in &self.terms {
            let (a, b) = (dom.lo[i], dom.hi[i]);
            let (cmin, cmax) =
                if c > 0 { (Some(c * a), (b < INF).then(|| c * b)) } else { ((b < INF).then(|| c * b), Some(c * a)) };
            lo = lo.zip(cmin).map(|(x, y)| x + y);
            hi = hi.zip(cmax).map(|(x, y)| x + y);
        }
        (lo, hi)
    }

    fn value(&self, dom: &Dom) -> Option<i128> {
        match self.range(dom) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
enum NAtom {
    /// `lin ≤ 0`
    Le(Lin),
    /// `lin = 0`
    Eq(Lin),
    /// `d | n`
    Div(Lin, Lin),
}

#[derive(Clone, Debug)]
enum Node {
    Atom(usize),
    And(Vec<Node>),
    Or(Vec<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    True,
    False,
    Open,
}

#[derive(Clone, Debug)]
struct Dom {
    lo: Vec<i128>,
    hi: Vec<i128>,
}

impl Dom {
    fn fixed(&self, i: usize) -> bool {
        self.lo[i] == self.hi[i]
    }

    fn width(&self, i: usize) -> i128 {
        if self.hi[i] >= INF {
            INF
        } else {
            self.hi[i] - self.lo[i]
        }
    }

    /// Tightens `x_i ≤ b`; returns (changed, consistent).
    fn upper(&mut self, i: usize, b: i128) -> (bool, bool) {
        if b < self.hi[i] {
            self.hi[i] = b;
            (true, b >= self.lo[i])
        } else {
            (false, true)
        }
    }

    fn lower(&mut self, i: usize, b: i128) -> (bool, bool) {
        if b > self.lo[i] {
            self.lo[i] = b;
            (true, b <= self.hi[i])
        } else {
            (false, true)
        }
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

struct Compiled {
    nvars: usize,
    atoms: Vec<NAtom>,
    root: Node,
    /// Free variables of the input and their indices.
    free: Vec<(PadVar, usize)>,
}

fn compile(f: &PadFormula) -> Compiled {
    let mut c = Compiled { nvars: 0, atoms: Vec::new(), root: Node::And(vec![]), free: Vec::new() };
    let mut scopes: HashMap<PadVar, Vec<usize>> = HashMap::new();
    c.root = compile_node(f, &mut scopes, &mut c);
    c
}

fn compile_node(f: &PadFormula, scopes: &mut HashMap<PadVar, Vec<usize>>, c: &mut Compiled) -> Node {
    match f {
        PadFormula::Atom(a) => {
            let mut lin = |t: &LinearTerm| -> Lin {
                let terms = t
                    .coeffs()
                    .iter()
                    .map(|&(v, k)| {
                        let stack = scopes.entry(v).or_default();
                        if stack.is_empty() {
                            stack.push(c.nvars);
                            c.free.push((v, c.nvars));
                            c.nvars += 1;
                        }
                        (*stack.last().expect("scope"), k as i128)
                    })
                    .collect();
                Lin { terms, k: t.constant_part() as i128 }
            };
            let atom = match a {
                Atom::Leq(x, y) => NAtom::Le(lin(&(x.clone() - y.clone()))),
                Atom::Eq(x, y) => NAtom::Eq(lin(&(x.clone() - y.clone()))),
                Atom::Divides(d, n) => NAtom::Div(lin(d), lin(n)),
            };
            c.atoms.push(atom);
            Node::Atom(c.atoms.len() - 1)
        }
        PadFormula::And(fs) => Node::And(fs.iter().map(|g| compile_node(g, scopes, c)).collect()),
        PadFormula::Or(fs) => Node::Or(fs.iter().map(|g| compile_node(g, scopes, c)).collect()),
        PadFormula::Exists(vs, body) => {
            for &v in vs {
                let stack = scopes.entry(v).or_default();
                // Keep a free occurrence outside the binder resolvable later.
                if stack.is_empty() {
                    stack.push(usize::MAX);
                }
                stack.push(c.nvars);
                c.nvars += 1;
            }
            let node = compile_node(body, scopes, c);
            for v in vs {
                let stack = scopes.get_mut(v).expect("scope");
                stack.pop();
                if stack.last() == Some(&usize::MAX) {
                    stack.pop();
                }
            }
            node
        }
    }
}

fn atom_status(a: &NAtom, dom: &Dom) -> Status {
    match a {
        NAtom::Le(l) => match l.range(dom) {
            (_, Some(hi)) if hi <= 0 => Status::True,
            (Some(lo), _) if lo > 0 => Status::False,
            _ => Status::Open,
        },
        NAtom::Eq(l) => match l.range(dom) {
            (Some(lo), Some(hi)) if lo == 0 && hi == 0 => Status::True,
            (Some(lo), _) if lo > 0 => Status::False,
            (_, Some(hi)) if hi < 0 => Status::False,
            _ => Status::Open,
        },
        NAtom::Div(d, n) => {
            let (dv, nv) = (d.value(dom), n.value(dom));
            match (dv, nv) {
                (Some(d), Some(n)) => bool_status(divides(d, n)),
                (Some(d), _) if d == 1 || d == -1 => Status::True,
                (_, Some(0)) => Status::True,
                (_, Some(n)) => {
                    // A nonzero n has divisors only in [-|n|, |n|].
                    match d.range(dom) {
                        (Some(lo), _) if lo > n.abs() => Status::False,
                        (_, Some(hi)) if hi < -n.abs() => Status::False,
                        _ => Status::Open,
                    }
                }
                (Some(d), None) if d != 0 => match n.range(dom) {
                    (Some(lo), Some(hi)) if hi - lo < d.abs() => {
                        let first = div_ceil(lo, d.abs()) * d.abs();
                        bool_status(first <= hi)
                    }
                    _ => Status::Open,
                },
                _ => Status::Open,
            }
        }
    }
}

fn bool_status(b: bool) -> Status {
    if b {
        Status::True
    } else {
        Status::False
    }
}

fn node_status(n: &Node, atoms: &[NAtom], dom: &Dom) -> Status {
    match n {
        Node::Atom(a) => atom_status(&atoms[*a], dom),
        Node::And(fs) => {
            let mut all = Status::True;
            for f in fs {
                match node_status(f, atoms, dom) {
                    Status::False => return Status::False,
                    Status::Open => all = Status::Open,
                    Status::True => {}
                }
            }
            all
        }
        Node::Or(fs) => {
            let mut any = Status::False;
            for f in fs {
                match node_status(f, atoms, dom) {
                    Status::True => return Status::True,
                    Status::Open => any = Status::Open,
                    Status::False => {}
                }
            }
            any
        }
    }
}

/// Bounds propagation for `lin ≤ 0`. Returns (changed, consistent).
fn propagate_le(l: &Lin, dom: &mut Dom) -> (bool, bool) {
    let mut finite = l.k;
    let mut infinite = 0usize;
    let mins: Vec<Option<i128>> = l
        .terms
        .iter()
        .map(|&(i, c)| if c > 0 { Some(c * dom.lo[i]) } else { (dom.hi[i] < INF).then(|| c * dom.hi[i]) })
        .collect();
    for m in &mins {
        match m {
            Some(x) => finite += x,
            None => infinite += 1,
        }
    }
    if infinite > 1 {
        return (false, true);
    }
    let mut changed = false;
    for (&(i, c), m) in l.terms.iter().zip(&mins) {
        let others = match (m, infinite) {
            (Some(x), 0) => finite - x,
            (None, 1) => finite,
            _ => continue,
        };
        // c·x_i ≤ −others
        let (ch, ok) = if c > 0 { dom.upper(i, div_floor(-others, c)) } else { dom.lower(i, div_ceil(-others, c)) };
        if !ok {
            return (true, false);
        }
        changed |= ch;
    }
    (changed, true)
}

/// Moves the bounds of the single open variable of `n` to values where
/// `d | n` holds, for a fixed nonzero `d`.
fn propagate_congruence(d: i128, n: &Lin, dom: &mut Dom) -> (bool, bool) {
    let open: Vec<&(usize, i128)> = n.terms.iter().filter(|&&(i, _)| !dom.fixed(i)).collect();
    let [&(i, c)] = open[..] else { return (false, true) };
    let rest: i128 = n.k + n.terms.iter().filter(|&&(j, _)| j != i).map(|&(j, cj)| cj * dom.lo[j]).sum::<i128>();
    let m = d.abs();
    let ok = |x: i128| (c * x + rest).rem_euclid(m) == 0;
    let mut changed = false;
    let start = dom.lo[i];
    match (0..m).map(|s| start + s).find(|&x| ok(x)) {
        None => return (true, false),
        Some(x) => {
            let (ch, fine) = dom.lower(i, x);
            if !fine {
                return (true, false);
            }
            changed |= ch;
        }
    }
    if dom.hi[i] < INF {
        let end = dom.hi[i];
        match (0..m).map(|s| end - s).find(|&x| ok(x)) {
            None => return (true, false),
            Some(x) => {
                let (ch, fine) = dom.upper(i, x);
                if !fine {
                    return (true, false);
                }
                changed |= ch;
            }
        }
    }
    (changed, true)
}

fn propagate(atoms: &[NAtom], active: &[usize], dom: &mut Dom) -> bool {
    for _ in 0..PROPAGATION_ROUNDS {
        let mut changed = false;
        for &a in active {
            let (ch, ok) = match &atoms[a] {
                NAtom::Le(l) => propagate_le(l, dom),
                NAtom::Eq(l) => {
                    let (c1, ok1) = propagate_le(l, dom);
                    if !ok1 {
                        return false;
                    }
                    let (c2, ok2) = propagate_le(&l.negate(), dom);
                    (c1 || c2, ok2)
                }
                NAtom::Div(d, n) => match (d.value(dom), n.value(dom)) {
                    (_, Some(nv)) if nv != 0 => {
                        let bound = Lin { terms: d.terms.clone(), k: d.k - nv.abs() };
                        let (c1, ok1) = propagate_le(&bound, dom);
                        if !ok1 {
                            return false;
                        }
                        let neg = Lin { terms: d.negate().terms, k: -d.k - nv.abs() };
                        let (c2, ok2) = propagate_le(&neg, dom);
                        (c1 || c2, ok2)
                    }
                    (Some(dv), None) if dv != 0 => propagate_congruence(dv, n, dom),
                    _ => (false, true),
                },
            };
            if !ok {
                return false;
            }
            changed |= ch;
        }
        if !changed {
            break;
        }
    }
    true
}

enum Mode<'a> {
    FindOne,
    /// Enumerate distinct values of the projected indices.
    Collect {
        project: &'a [usize],
        found: BTreeSet<Vec<u64>>,
        limit: usize,
    },
}

struct Search<'a> {
    atoms: &'a [NAtom],
    cap: i128,
    steps: u64,
    /// The cap or the step limit cut the search somewhere.
    inexact: bool,
    mode: Mode<'a>,
}

impl Search<'_> {
    /// `Some(model)` on success in find-one mode; collect mode always
    /// returns `None` after recording.
    fn run(&mut self, mut dom: Dom, mut active: Vec<usize>, mut pending: Vec<Node>) -> Option<Vec<i128>> {
        self.steps += 1;
        if self.steps > STEP_LIMIT {
            self.inexact = true;
            return None;
        }
        loop {
            if !propagate(self.atoms, &active, &mut dom) {
                return None;
            }
            let mut keep = Vec::with_capacity(active.len());
            for &a in &active {
                match atom_status(&self.atoms[a], &dom) {
                    Status::False => return None,
                    Status::Open => keep.push(a),
                    Status::True => {}
                }
            }
            active = keep;
            let mut changed = false;
            let mut work = std::mem::take(&mut pending);
            while let Some(n) = work.pop() {
                match n {
                    Node::Atom(a) => match atom_status(&self.atoms[a], &dom) {
                        Status::False => return None,
                        Status::True => {}
                        Status::Open => {
                            active.push(a);
                            changed = true;
                        }
                    },
                    Node::And(fs) => work.extend(fs),
                    Node::Or(fs) => {
                        let mut open = Vec::new();
                        let mut satisfied = false;
                        for f in fs {
                            match node_status(&f, self.atoms, &dom) {
                                Status::True => {
                                    satisfied = true;
                                    break;
                                }
                                Status::Open => open.push(f),
                                Status::False => {}
                            }
                        }
                        if satisfied {
                            continue;
                        }
                        match open.len() {
                            0 => return None,
                            1 => {
                                work.push(open.pop().expect("one"));
                                changed = true;
                            }
                            _ => pending.push(Node::Or(open)),
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }

        if !pending.is_empty() {
            let pick = (0..pending.len())
                .min_by_key(|&i| match &pending[i] {
                    Node::Or(fs) => fs.len(),
                    _ => 0,
                })
                .expect("nonempty");
            let Node::Or(options) = pending.swap_remove(pick) else { unreachable!("only disjunctions stay pending") };
            for option in options {
                let mut next = pending.clone();
                next.push(option);
                if let Some(m) = self.run(dom.clone(), active.clone(), next) {
                    return Some(m);
                }
                if self.steps > STEP_LIMIT || self.collect_full() {
                    return None;
                }
            }
            return None;
        }

        // Only atoms remain. Pick a variable to label.
        let var = match &self.mode {
            Mode::Collect { project, .. } if project.iter().any(|&i| !dom.fixed(i)) => {
                project.iter().copied().filter(|&i| !dom.fixed(i)).min_by_key(|&i| dom.width(i))
            }
            Mode::Collect { project, .. } => {
                let key: Vec<u64> = project.iter().map(|&i| dom.lo[i] as u64).collect();
                let already = matches!(&self.mode, Mode::Collect { found, .. } if found.contains(&key));
                if !already {
                    let mut one = Search {
                        atoms: self.atoms,
                        cap: self.cap,
                        steps: self.steps,
                        inexact: false,
                        mode: Mode::FindOne,
                    };
                    let hit = one.run(dom.clone(), active.clone(), Vec::new()).is_some();
                    self.steps = one.steps;
                    self.inexact |= one.inexact;
                    if hit {
                        if let Mode::Collect { found, .. } = &mut self.mode {
                            found.insert(key);
                        }
                    }
                }
                return None;
            }
            Mode::FindOne => {
                if active.is_empty() {
                    return Some(dom.lo.clone());
                }
                let mut vars: Vec<usize> = Vec::new();
                for &a in &active {
                    match &self.atoms[a] {
                        NAtom::Le(l) | NAtom::Eq(l) => vars.extend(l.terms.iter().map(|t| t.0)),
                        NAtom::Div(d, n) => vars.extend(d.terms.iter().chain(&n.terms).map(|t| t.0)),
                    }
                }
                vars.into_iter().filter(|&i| !dom.fixed(i)).min_by_key(|&i| dom.width(i))
            }
        };
        let Some(i) = var else {
            // Everything fixed yet some atom open: cannot happen, atoms on
            // fixed variables are decided.
            return None;
        };
        let top = if dom.hi[i] > self.cap {
            self.inexact = true;
            self.cap
        } else {
            dom.hi[i]
        };
        let mut x = dom.lo[i];
        while x <= top {
            let mut next = dom.clone();
            next.lo[i] = x;
            next.hi[i] = x;
            if let Some(m) = self.run(next, active.clone(), Vec::new()) {
                return Some(m);
            }
            if self.steps > STEP_LIMIT || self.collect_full() {
                return None;
            }
            x += 1;
        }
        None
    }

    fn collect_full(&self) -> bool {
        match &self.mode {
            Mode::Collect { found, limit, .. } => found.len() >= *limit,
            Mode::FindOne => false,
        }
    }
}

fn initial_dom(c: &Compiled, fixed: &[(PadVar, u64)]) -> Dom {
    let mut dom = Dom { lo: vec![0; c.nvars], hi: vec![INF; c.nvars] };
    for &(v, n) in fixed {
        if let Some(&(_, i)) = c.free.iter().find(|(w, _)| *w == v) {
            dom.lo[i] = n as i128;
            dom.hi[i] = n as i128;
        }
    }
    dom
}

fn eval_node(n: &Node, atoms: &[NAtom], model: &[i128]) -> bool {
    let lin = |l: &Lin| l.k + l.terms.iter().map(|&(i, c)| c * model[i]).sum::<i128>();
    match n {
        Node::Atom(a) => match &atoms[*a] {
            NAtom::Le(l) => lin(l) <= 0,
            NAtom::Eq(l) => lin(l) == 0,
            NAtom::Div(d, m) => divides(lin(d), lin(m)),
        },
        Node::And(fs) => fs.iter().all(|f| eval_node(f, atoms, model)),
        Node::Or(fs) => fs.iter().any(|f| eval_node(f, atoms, model)),
    }
}

fn solve_compiled(c: &Compiled, fixed: &[(PadVar, u64)]) -> SatResult {
    for &cap in &BOUND_SCHEDULE {
        let mut s = Search { atoms: &c.atoms, cap: cap as i128, steps: 0, inexact: false, mode: Mode::FindOne };
        match s.run(initial_dom(c, fixed), Vec::new(), vec![c.root.clone()]) {
            Some(model) => {
                // Self-check: the matrix must hold under the model.
                if !eval_node(&c.root, &c.atoms, &model) {
                    debug_assert!(false, "search returned a non-model");
                    return SatResult::Unknown(cap);
                }
                let val = c.free.iter().map(|&(v, i)| (v, model[i] as u64)).collect();
                return SatResult::Sat(val);
            }
            None if !s.inexact => return SatResult::Unsat,
            None => {}
        }
    }
    SatResult::Unknown(*BOUND_SCHEDULE.last().expect("schedule"))
}

/// Satisfiability over ℕ with an escalating cap. `Unsat` is only returned
/// when a search finished without hitting the cap or the step limit.
pub fn is_satisfiable(f: &PadFormula) -> SatResult {
    let result = solve_compiled(&compile(f), &[]);
    if let SatResult::Sat(model) = &result {
        debug_assert_eq!(super::evaluate(f, model).ok(), Some(true));
    }
    result
}

pub(crate) fn solve_with_fixed(f: &PadFormula, fixed: &[(PadVar, u64)]) -> SatResult {
    solve_compiled(&compile(f), fixed)
}

/// Distinct models projected onto `project`, in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSet {
    pub models: Vec<Vec<u64>>,
    /// Every projected model is listed.
    pub complete: bool,
}

/// Enumerates the projections of all models onto `project`, stopping at
/// `limit` entries. Variables in `project` that do not occur in `f` are
/// unconstrained, so the set is then incomplete unless empty.
pub fn enumerate_models(f: &PadFormula, project: &[PadVar], limit: usize) -> ModelSet {
    let mut c = compile(f);
    let mut idx = Vec::new();
    for &v in project {
        let i = match c.free.iter().find(|(w, _)| *w == v) {
            Some(&(_, i)) => i,
            None => {
                c.free.push((v, c.nvars));
                c.nvars += 1;
                c.nvars - 1
            }
        };
        idx.push(i);
    }
    let mut last = ModelSet { models: Vec::new(), complete: false };
    for &cap in &BOUND_SCHEDULE {
        let mut s = Search {
            atoms: &c.atoms,
            cap: cap as i128,
            steps: 0,
            inexact: false,
            mode: Mode::Collect { project: &idx, found: BTreeSet::new(), limit },
        };
        s.run(initial_dom(&c, &[]), Vec::new(), vec![c.root.clone()]);
        let full = s.collect_full();
        let Mode::Collect { found, .. } = s.mode else { unreachable!("collect mode") };
        last = ModelSet { models: found.into_iter().collect(), complete: !s.inexact && !full };
        if last.complete || full {
            break;
        }
    }
    last
}
