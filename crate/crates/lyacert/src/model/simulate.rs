//! Concrete-semantics simulator over the abstract models. Used both as a
//! soundness oracle for certificates (no certified bound may ever be crossed
//! by a simulated run) and to exhibit witnesses when certification fails.

use super::types::*;
use crate::rat::{pow2, rat, Rat};
use crate::solver::lp::{solve, Cmp, LinProg, LpStatus};
use num::{One, Signed, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub enum UncertaintyPolicy {
    /// Seeded uniform sampling of w in [-1,1]^n_w and admissible binaries.
    Seeded(u64),
    /// Enumerate binary selectors exhaustively (n_v small), w still seeded.
    ExhaustiveV(u64),
}

impl UncertaintyPolicy {
    fn rng(&self) -> ChaCha8Rng {
        match self {
            UncertaintyPolicy::Seeded(s) | UncertaintyPolicy::ExhaustiveV(s) => {
                ChaCha8Rng::seed_from_u64(*s)
            }
        }
    }

    fn exhaustive(&self) -> bool {
        matches!(self, UncertaintyPolicy::ExhaustiveV(_))
    }
}

/// Uniform dyadic rational in [-1, 1] (exact arithmetic downstream).
fn sample_unit(rng: &mut ChaCha8Rng) -> Rat {
    let denom: i64 = 1 << 20;
    let num = rng.gen_range(-denom..=denom);
    rat(num) / rat(denom)
}

fn sample_w(rng: &mut ChaCha8Rng, n_w: usize) -> Vec<Rat> {
    (0..n_w).map(|_| sample_unit(rng)).collect()
}

fn v_combos(n_v: usize) -> Vec<Vec<Rat>> {
    let mut out = Vec::with_capacity(1 << n_v);
    for bits in 0..(1u32 << n_v) {
        out.push(
            (0..n_v)
                .map(|i| if bits >> i & 1 == 1 { rat(1) } else { rat(-1) })
                .collect(),
        );
    }
    out
}

/// Successors of `x` along one affine-labeled edge, for a sampled w.
fn affine_successors(
    t: &TransitionLabel,
    x: &[Rat],
    rng: &mut ChaCha8Rng,
    exhaustive: bool,
) -> Vec<Vec<Rat>> {
    let attempts = if t.n_w() == 0 { 1 } else { 4 };
    let mut out = Vec::new();
    for _ in 0..attempts {
        let w = sample_w(rng, t.n_w());
        let mut combos = v_combos(t.n_v());
        if !exhaustive {
            combos.shuffle(rng);
        }
        for v in combos {
            let mut point: Vec<Rat> = x.to_vec();
            point.extend(w.iter().cloned());
            point.extend(v.iter().cloned());
            if t.constraint.is_universal() || t.constraint.contains(&point) {
                out.push(t.apply(x, &w, &v));
                if !exhaustive {
                    break;
                }
            }
        }
        if !out.is_empty() && !exhaustive {
            break;
        }
    }
    out
}

/// One successor of `x` through a MILM block, if the transition relation is
/// nonempty there: enumerate v, then solve exactly for an admissible w.
fn milm_successor(
    b: &MilmBlock,
    x: &[Rat],
    rng: &mut ChaCha8Rng,
    cap_exhaustive: usize,
) -> Option<Vec<Rat>> {
    assert!(
        b.n_v <= cap_exhaustive,
        "binary enumeration cap exceeded: n_v = {}",
        b.n_v
    );
    let mut combos = v_combos(b.n_v);
    combos.shuffle(rng);
    for v in combos {
        if let Some(w) = feasible_w(b, x, &v, rng) {
            let xe = b.extended(x, &w, &v);
            return Some(b.f.matvec(&xe));
        }
    }
    None
}

/// Exact LP: find w in [-1,1]^n_w with H [x; w; v; 1] = 0.
fn feasible_w(b: &MilmBlock, x: &[Rat], v: &[Rat], rng: &mut ChaCha8Rng) -> Option<Vec<Rat>> {
    if b.n_w == 0 {
        let xe = b.extended(x, &[], v);
        let hx = b.h.matvec(&xe);
        return hx.iter().all(|r| r.is_zero()).then(Vec::new);
    }
    let mut p: LinProg<Rat> = LinProg::new(b.n_w);
    p.bounds = vec![(Some(rat(-1)), Some(rat(1))); b.n_w];
    // random vertex-tilting objective for trace variety
    p.minimize = (0..b.n_w)
        .map(|_| if rng.gen_bool(0.5) { rat(1) } else { rat(-1) })
        .collect();
    for row_idx in 0..b.h.r {
        let row = b.h.row(row_idx);
        let mut lhs = Rat::zero();
        for (i, xv) in x.iter().enumerate() {
            lhs += &row[i] * xv;
        }
        for (i, vv) in v.iter().enumerate() {
            lhs += &row[b.n + b.n_w + i] * vv;
        }
        lhs += &row[b.n_e() - 1];
        let coeffs: Vec<Rat> = (0..b.n_w).map(|i| row[b.n + i].clone()).collect();
        p.constrain(coeffs, Cmp::Eq, -lhs);
    }
    let r = solve(&p);
    (r.status == LpStatus::Optimal).then(|| r.x)
}

fn overflow_hit(x: &[Rat], alpha: &Option<Vec<Rat>>) -> bool {
    match alpha {
        Some(a) => x.iter().zip(a).any(|(xi, ai)| xi.abs() > *ai),
        None => false,
    }
}

/// Runs the graph model from `init` under the policy, stopping at the
/// terminal node, an unsafe state, a stuck state, or the step budget.
pub fn simulate_graph(
    model: &GraphModel,
    init: &StateVec,
    policy: UncertaintyPolicy,
    max_steps: usize,
) -> Trace {
    let mut rng = policy.rng();
    let mut state = init.clone();
    let mut states = vec![state.clone()];
    for _ in 0..max_steps {
        if overflow_hit(&state.x, &model.overflow)
            || model.unsafe_sets[state.node].iter().any(|u| u.contains(&state.x))
        {
            return Trace { states, status: TraceStatus::UnsafeSetHit };
        }
        if state.node == model.terminal {
            return Trace { states, status: TraceStatus::ReachedTerminal };
        }
        // candidate moves from enabled edges
        let mut moves: Vec<StateVec> = Vec::new();
        let inv = &model.invariants[state.node];
        for (_, edge) in model.outgoing(state.node) {
            if !edge.passport.contains(&state.x) || !inv.contains(&state.x) {
                continue;
            }
            match &edge.label {
                EdgeLabel::Affine(t) => {
                    for x in affine_successors(t, &state.x, &mut rng, policy.exhaustive()) {
                        moves.push(StateVec { node: edge.to, x });
                    }
                }
                EdgeLabel::Milm(b) => {
                    if let Some(x) = milm_successor(b, &state.x, &mut rng, 12) {
                        moves.push(StateVec { node: edge.to, x });
                    }
                }
            }
        }
        if moves.is_empty() {
            return Trace { states, status: TraceStatus::Stuck };
        }
        state = moves[rng.gen_range(0..moves.len())].clone();
        states.push(state.clone());
    }
    Trace { states, status: TraceStatus::BudgetExhausted }
}

/// Runs a stand-alone MILM; per Eq.-style semantics the terminal set is the
/// set of states with an empty transition relation.
pub fn simulate_milm(
    milm: &Milm,
    init: &[Rat],
    policy: UncertaintyPolicy,
    max_steps: usize,
) -> Trace {
    let mut rng = policy.rng();
    let mut x = init.to_vec();
    let mut states = vec![StateVec { node: 0, x: x.clone() }];
    for _ in 0..max_steps {
        if x.iter().any(|xi| xi.abs() > Rat::one()) {
            return Trace { states, status: TraceStatus::UnsafeSetHit };
        }
        match milm_successor(&milm.block, &x, &mut rng, 12) {
            Some(next) => {
                x = next;
                states.push(StateVec { node: 0, x: x.clone() });
            }
            None => return Trace { states, status: TraceStatus::ReachedTerminal },
        }
    }
    Trace { states, status: TraceStatus::BudgetExhausted }
}

/// Whether the abstract model admits the concrete step (i, x) -> (j, x'):
/// some edge with satisfied passport and admissible (w, v) reproducing x'
/// exactly. This is the replay primitive behind the abstraction-soundness
/// property tests.
pub fn graph_admits_step(model: &GraphModel, from: &StateVec, to: &StateVec) -> bool {
    let x = &from.x;
    for (_, edge) in model.outgoing(from.node) {
        if edge.to != to.node
            || !edge.passport.contains(x)
            || !model.invariants[from.node].contains(x)
        {
            continue;
        }
        match &edge.label {
            EdgeLabel::Affine(t) => {
                if affine_step_match(t, x, &to.x) {
                    return true;
                }
            }
            EdgeLabel::Milm(b) => {
                if milm_step_match(b, x, &to.x) {
                    return true;
                }
            }
        }
    }
    false
}

fn affine_step_match(t: &TransitionLabel, x: &[Rat], target: &[Rat]) -> bool {
    let base: Vec<Rat> = {
        let ax = t.a.matvec(x);
        ax.iter().zip(&t.e).zip(target).map(|((a, e), tgt)| tgt - a - e).collect()
    };
    // try each binary combo; w must solve B w = residual within the box
    for v in v_combos(t.n_v()) {
        let residual: Vec<Rat> = if t.n_v() > 0 {
            let cv = t.c.matvec(&v);
            base.iter().zip(&cv).map(|(b, c)| b - c).collect()
        } else {
            base.clone()
        };
        if t.n_w() == 0 {
            if residual.iter().any(|r| !r.is_zero()) {
                continue;
            }
            let mut point: Vec<Rat> = x.to_vec();
            point.extend(v.iter().cloned());
            if t.constraint.is_universal() || t.constraint.contains(&point) {
                return true;
            }
            continue;
        }
        if let Some(w) = t.b.solve_any(&residual) {
            // unique solution when B has full column rank; otherwise search
            // the affine solution space's box section by LP on linear parts
            let exactly_solves = {
                let bw = t.b.matvec(&w);
                bw.iter().zip(&residual).all(|(a, b)| a == b)
            };
            if exactly_solves && w.iter().all(|wi| wi.abs() <= Rat::one()) {
                let mut point: Vec<Rat> = x.to_vec();
                point.extend(w.iter().cloned());
                point.extend(v.iter().cloned());
                if t.constraint.contains(&point) {
                    return true;
                }
            }
        }
        // LP over w: B w = residual, -1 <= w <= 1, linear constraint rows
        let mut p: LinProg<Rat> = LinProg::new(t.n_w());
        p.bounds = vec![(Some(rat(-1)), Some(rat(1))); t.n_w()];
        for r in 0..t.b.r {
            let coeffs: Vec<Rat> = (0..t.b.c).map(|c| t.b[(r, c)].clone()).collect();
            p.constrain(coeffs, Cmp::Eq, residual[r].clone());
        }
        let n = t.n();
        for li in t.constraint.lin_ineq.iter() {
            let mut lhs = li.constant.clone();
            for (i, xi) in x.iter().enumerate() {
                lhs += &li.coeffs[i] * xi;
            }
            for (i, vi) in v.iter().enumerate() {
                lhs += &li.coeffs[n + t.n_w() + i] * vi;
            }
            let coeffs: Vec<Rat> = (0..t.n_w()).map(|i| li.coeffs[n + i].clone()).collect();
            p.constrain(coeffs, Cmp::Ge, -lhs);
        }
        for le in t.constraint.lin_eq.iter() {
            let mut lhs = le.constant.clone();
            for (i, xi) in x.iter().enumerate() {
                lhs += &le.coeffs[i] * xi;
            }
            for (i, vi) in v.iter().enumerate() {
                lhs += &le.coeffs[n + t.n_w() + i] * vi;
            }
            let coeffs: Vec<Rat> = (0..t.n_w()).map(|i| le.coeffs[n + i].clone()).collect();
            p.constrain(coeffs, Cmp::Eq, -lhs);
        }
        if solve(&p).status == LpStatus::Optimal {
            // quadratic constraint rows, if any, are only checked when w is
            // pinned by the equations; none of the bundled models mix free w
            // with quadratic constraints on w
            return true;
        }
    }
    false
}

fn milm_step_match(b: &MilmBlock, x: &[Rat], target: &[Rat]) -> bool {
    for v in v_combos(b.n_v) {
        let mut p: LinProg<Rat> = LinProg::new(b.n_w);
        p.bounds = vec![(Some(rat(-1)), Some(rat(1))); b.n_w];
        let mut rows: Vec<(Vec<Rat>, Rat)> = Vec::new();
        for r in 0..b.h.r {
            let row = b.h.row(r);
            let mut lhs = row[b.n_e() - 1].clone();
            for (i, xi) in x.iter().enumerate() {
                lhs += &row[i] * xi;
            }
            for (i, vi) in v.iter().enumerate() {
                lhs += &row[b.n + b.n_w + i] * vi;
            }
            rows.push(((0..b.n_w).map(|i| row[b.n + i].clone()).collect(), -lhs));
        }
        for r in 0..b.f.r {
            let row = b.f.row(r);
            let mut lhs = row[b.n_e() - 1].clone();
            for (i, xi) in x.iter().enumerate() {
                lhs += &row[i] * xi;
            }
            for (i, vi) in v.iter().enumerate() {
                lhs += &row[b.n + b.n_w + i] * vi;
            }
            rows.push((
                (0..b.n_w).map(|i| row[b.n + i].clone()).collect(),
                &target[r] - lhs,
            ));
        }
        for (coeffs, rhs) in rows {
            p.constrain(coeffs, Cmp::Eq, rhs);
        }
        if solve(&p).status == LpStatus::Optimal {
            return true;
        }
    }
    false
}

/// Samples a point from the model's initial set: exact LP with a random
/// objective, retried along random directions. Returns None when the linear
/// part of the set is infeasible.
pub fn sample_init(model: &GraphModel, rng: &mut ChaCha8Rng) -> Option<StateVec> {
    let init = model.init_set();
    let n = model.n();
    // pin coordinates forced by equalities; randomize within inequalities
    let mut p: LinProg<Rat> = LinProg::new(n);
    p.minimize = (0..n)
        .map(|_| {
            let denom: i64 = 1 << 10;
            rat(rng.gen_range(-denom..=denom)) / rat(denom)
        })
        .collect();
    // keep the sample inside the scaled box to avoid unbounded rays
    p.bounds = vec![(Some(-model.scale.clone() * pow2(4)), Some(model.scale.clone() * pow2(4))); n];
    for e in &init.lin_ineq {
        p.constrain(e.coeffs.clone(), Cmp::Ge, -e.constant.clone());
    }
    for e in &init.lin_eq {
        p.constrain(e.coeffs.clone(), Cmp::Eq, -e.constant.clone());
    }
    let r = solve(&p);
    if r.status != LpStatus::Optimal {
        return None;
    }
    Some(StateVec { node: model.start, x: r.x })
}
