//! Graph reduction: eliminating interior nodes by composing consecutive
//! affine transitions and pulling passports back along the composition. The
//! reduced model is trace-equivalent to the original when traces are sampled
//! at the surviving nodes.

use super::semialg::SemialgebraicSet;
use super::types::*;
use crate::rat::Rat;
use crate::rlinalg::RMat;
use num::Zero;

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    #[error("cannot eliminate node `{0}`: it is the start or terminal node")]
    Endpoint(String),
    #[error("cannot eliminate node `{0}`: it carries a self-loop")]
    SelfLoop(String),
    #[error(
        "cannot eliminate node `{0}`: edge `{1}` carries a mixed-integer block, \
         whose composition would not stay affine"
    )]
    NonAffine(String, String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sequential composition of two affine labels (first `l1`, then `l2`),
/// with the intermediate passport/invariant `mid` pulled back through `l1`.
/// Constraints that stay over x alone land in the returned passport
/// fragment; anything touching uncertainties joins the constraint set.
pub fn compose_labels(
    l1: &TransitionLabel,
    l2: &TransitionLabel,
    mid: &SemialgebraicSet,
) -> (TransitionLabel, SemialgebraicSet) {
    let n = l1.n();
    let q1 = l1.n_w();
    let q2 = l2.n_w();
    let v1 = l1.n_v();
    let v2 = l2.n_v();
    let a = l2.a.matmul(&l1.a);
    let mut b = RMat::zeros(n, q1 + q2);
    let a2b1 = l2.a.matmul(&l1.b);
    for i in 0..n {
        for j in 0..q1 {
            b[(i, j)] = a2b1[(i, j)].clone();
        }
        for j in 0..q2 {
            b[(i, q1 + j)] = l2.b[(i, j)].clone();
        }
    }
    let mut c = RMat::zeros(n, v1 + v2);
    let a2c1 = l2.a.matmul(&l1.c);
    for i in 0..n {
        for j in 0..v1 {
            c[(i, j)] = a2c1[(i, j)].clone();
        }
        for j in 0..v2 {
            c[(i, v1 + j)] = l2.c[(i, j)].clone();
        }
    }
    let mut e = l2.a.matvec(&l1.e);
    for (ei, e2i) in e.iter_mut().zip(&l2.e) {
        *ei += e2i;
    }

    // combined uncertainty space: (x, w1, w2, v1, v2)
    let dim = n + q1 + q2 + v1 + v2;
    let mut constraint = SemialgebraicSet::universal(dim);
    let mut passport = SemialgebraicSet::universal(n);

    // l1's constraints live over (x, w1, v1): selection map into the new space
    if !l1.constraint.is_universal() {
        let mut sel = RMat::zeros(n + q1 + v1, dim);
        for i in 0..n {
            sel[(i, i)] = Rat::from_integer(1.into());
        }
        for i in 0..q1 {
            sel[(n + i, n + i)] = Rat::from_integer(1.into());
        }
        for i in 0..v1 {
            sel[(n + q1 + i, n + q1 + q2 + i)] = Rat::from_integer(1.into());
        }
        let zero = vec![Rat::zero(); n + q1 + v1];
        constraint.conjoin(&l1.constraint.pullback(&sel, &zero));
    }

    // mid-node passport/invariant: substitute x_mid = A1 x + B1 w1 + E1
    if !mid.is_universal() {
        let pulled = pull_through(mid, l1, dim, n, q1, q2);
        split_constraints(pulled, n, &mut passport, &mut constraint);
    }

    // l2's constraints live over (x_mid, w2, v2)
    if !l2.constraint.is_universal() {
        let mut map = RMat::zeros(n + q2 + v2, dim);
        let mut off = vec![Rat::zero(); n + q2 + v2];
        for i in 0..n {
            for j in 0..n {
                map[(i, j)] = l1.a[(i, j)].clone();
            }
            for j in 0..q1 {
                map[(i, n + j)] = l1.b[(i, j)].clone();
            }
            for j in 0..v1 {
                map[(i, n + q1 + q2 + j)] = l1.c[(i, j)].clone();
            }
            off[i] = l1.e[i].clone();
        }
        for i in 0..q2 {
            map[(n + i, n + q1 + i)] = Rat::from_integer(1.into());
        }
        for i in 0..v2 {
            map[(n + q2 + i, n + q1 + q2 + v1 + i)] = Rat::from_integer(1.into());
        }
        let pulled = l2.constraint.pullback(&map, &off);
        split_constraints(pulled, n, &mut passport, &mut constraint);
    }

    let label = TransitionLabel { a, b, c, e, constraint };
    (label, passport)
}

/// Pulls an x-space set through l1 into the combined (x, w1, w2, v1, v2)
/// space.
fn pull_through(
    set: &SemialgebraicSet,
    l1: &TransitionLabel,
    dim: usize,
    n: usize,
    q1: usize,
    q2: usize,
) -> SemialgebraicSet {
    let mut map = RMat::zeros(n, dim);
    for i in 0..n {
        for j in 0..n {
            map[(i, j)] = l1.a[(i, j)].clone();
        }
        for j in 0..q1 {
            map[(i, n + j)] = l1.b[(i, j)].clone();
        }
        for j in 0..l1.n_v() {
            map[(i, n + q1 + q2 + j)] = l1.c[(i, j)].clone();
        }
    }
    set.pullback(&map, &l1.e)
}

/// Constraints supported on the x coordinates alone move to the passport;
/// the rest stay in the (x, w, v) constraint set.
fn split_constraints(
    pulled: SemialgebraicSet,
    n: usize,
    passport: &mut SemialgebraicSet,
    constraint: &mut SemialgebraicSet,
) {
    let dim = pulled.dim;
    let only_x_aff = |e: &super::semialg::AffExpr| e.coeffs[n..].iter().all(|c| c.is_zero());
    let only_x_quad = |q: &super::semialg::QuadExpr| {
        (0..=dim).all(|i| {
            (0..=dim).all(|j| {
                let inside = (i < n || i == dim) && (j < n || j == dim);
                inside || q.mat[(i, j)].is_zero()
            })
        })
    };
    let restrict_aff = |e: &super::semialg::AffExpr| super::semialg::AffExpr {
        coeffs: e.coeffs[..n].to_vec(),
        constant: e.constant.clone(),
    };
    let restrict_quad = |q: &super::semialg::QuadExpr| {
        let mut m = RMat::zeros(n + 1, n + 1);
        for i in 0..=n {
            let ii = if i == n { dim } else { i };
            for j in 0..=n {
                let jj = if j == n { dim } else { j };
                m[(i, j)] = q.mat[(ii, jj)].clone();
            }
        }
        super::semialg::QuadExpr::from_mat(m)
    };
    for e in &pulled.lin_ineq {
        if only_x_aff(e) {
            passport.lin_ineq.push(restrict_aff(e));
        } else {
            constraint.lin_ineq.push(e.clone());
        }
    }
    for e in &pulled.lin_eq {
        if only_x_aff(e) {
            passport.lin_eq.push(restrict_aff(e));
        } else {
            constraint.lin_eq.push(e.clone());
        }
    }
    for q in &pulled.quad_ineq {
        if only_x_quad(q) {
            passport.quad_ineq.push(restrict_quad(q));
        } else {
            constraint.quad_ineq.push(q.clone());
        }
    }
    for q in &pulled.quad_eq {
        if only_x_quad(q) {
            passport.quad_eq.push(restrict_quad(q));
        } else {
            constraint.quad_eq.push(q.clone());
        }
    }
    passport.dedup();
    constraint.dedup();
}

/// Eliminates the listed nodes one at a time, in order. Every path through an
/// eliminated node becomes a composed edge between its neighbors; edges whose
/// composed passport is exactly infeasible against the source invariant are
/// pruned.
pub fn reduce_graph(model: &GraphModel, eliminate: &[NodeId]) -> Result<GraphModel, ReduceError> {
    model.validate()?;
    let mut edges = model.edges.clone();
    for &node in eliminate {
        if node == model.start || node == model.terminal {
            return Err(ReduceError::Endpoint(model.node_names[node].clone()));
        }
        if edges.iter().any(|e| e.from == node && e.to == node) {
            return Err(ReduceError::SelfLoop(model.node_names[node].clone()));
        }
        for e in edges.iter().filter(|e| e.from == node || e.to == node) {
            if matches!(e.label, EdgeLabel::Milm(_)) {
                return Err(ReduceError::NonAffine(
                    model.node_names[node].clone(),
                    format!("{}->{}", model.node_names[e.from], model.node_names[e.to]),
                ));
            }
        }
        let incoming: Vec<Edge> = edges.iter().filter(|e| e.to == node).cloned().collect();
        let outgoing: Vec<Edge> = edges.iter().filter(|e| e.from == node).cloned().collect();
        edges.retain(|e| e.from != node && e.to != node);
        for ein in &incoming {
            let EdgeLabel::Affine(l1) = &ein.label else { unreachable!() };
            for eout in &outgoing {
                let EdgeLabel::Affine(l2) = &eout.label else { unreachable!() };
                let mut mid = model.invariants[node].clone();
                mid.conjoin(&eout.passport);
                let (label, extra_passport) = compose_labels(l1, l2, &mid);
                let mut passport = ein.passport.clone();
                passport.conjoin(&extra_passport);
                edges.push(Edge {
                    from: ein.from,
                    to: eout.to,
                    k: 0, // re-indexed below
                    label: EdgeLabel::Affine(label),
                    passport,
                });
            }
        }
    }

    // prune edges that cannot fire: passport /\ source invariant empty
    // (linear part, exact LP; quadratic parts only make the set smaller)
    edges.retain(|e| {
        let mut s = e.passport.clone();
        s.conjoin(&model.invariants[e.from]);
        s.lin_feasible()
    });

    // rebuild node table with survivors
    let survivors: Vec<NodeId> = (0..model.num_nodes())
        .filter(|i| !eliminate.contains(i))
        .collect();
    let remap = |old: NodeId| survivors.iter().position(|&s| s == old).unwrap();
    let mut new_edges: Vec<Edge> = edges
        .into_iter()
        .map(|mut e| {
            e.from = remap(e.from);
            e.to = remap(e.to);
            e
        })
        .collect();
    new_edges.sort_by_key(|e| (e.from, e.to, e.k));
    let mut counters: std::collections::BTreeMap<(NodeId, NodeId), usize> =
        std::collections::BTreeMap::new();
    for e in &mut new_edges {
        let c = counters.entry((e.from, e.to)).or_insert(0);
        *c += 1;
        e.k = *c;
    }

    let reduced = GraphModel {
        vars: model.vars.clone(),
        scale: model.scale.clone(),
        node_names: survivors.iter().map(|&i| model.node_names[i].clone()).collect(),
        start: remap(model.start),
        terminal: remap(model.terminal),
        edges: new_edges,
        invariants: survivors.iter().map(|&i| model.invariants[i].clone()).collect(),
        unsafe_sets: survivors.iter().map(|&i| model.unsafe_sets[i].clone()).collect(),
        overflow: model.overflow.clone(),
    };
    reduced.validate()?;
    Ok(reduced)
}
