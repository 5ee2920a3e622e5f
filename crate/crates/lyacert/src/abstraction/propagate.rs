//! Invariant-set strengthening: pre-image pullbacks along invertible
//! deterministic transitions and equality preservation for single-target
//! assignment rows. Runs a bounded number of rounds; every constraint added
//! to a node must be valid on the image of every incoming edge.

use crate::model::semialg::{AffExpr, SemialgebraicSet};
use crate::model::types::*;
use crate::rat::Rat;
use crate::rlinalg::RMat;
use num::Zero;

/// Joint [A | B | C] matrix mapping (x, w, v) to the successor state.
fn stacked_map(t: &TransitionLabel) -> RMat {
    let n = t.n();
    let total = n + t.n_w() + t.n_v();
    let mut m = RMat::zeros(n, total);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = t.a[(i, j)].clone();
        }
        for j in 0..t.n_w() {
            m[(i, n + j)] = t.b[(i, j)].clone();
        }
        for j in 0..t.n_v() {
            m[(i, n + t.n_w() + j)] = t.c[(i, j)].clone();
        }
    }
    m
}

/// The linear relaxation of an edge's pre-state relation, over (x, w, v):
/// source invariant and passport, the label's own linear constraints, and
/// the w/v boxes (binaries relaxed to [-1,1], which is sound here).
fn edge_source_set(model: &GraphModel, edge: &Edge, t: &TransitionLabel) -> SemialgebraicSet {
    let n = model.n();
    let dim = n + t.n_w() + t.n_v();
    let mut set = model.invariants[edge.from].embed(dim, 0);
    set.conjoin(&edge.passport.embed(dim, 0));
    if !t.constraint.is_universal() {
        set.conjoin(&t.constraint);
    }
    for j in 0..(t.n_w() + t.n_v()) {
        let mut up = AffExpr::zero(dim);
        up.coeffs[n + j] = crate::rat::rat(-1);
        up.constant = crate::rat::rat(1);
        let mut dn = AffExpr::zero(dim);
        dn.coeffs[n + j] = crate::rat::rat(1);
        dn.constant = crate::rat::rat(1);
        set.lin_ineq.push(up);
        set.lin_ineq.push(dn);
    }
    set.dedup();
    set
}

/// Does `expr >= 0` (or `= 0`) over the successor state hold on the image of
/// this edge? Exact Farkas on the linear relaxation.
fn holds_on_edge(model: &GraphModel, edge: &Edge, expr: &AffExpr, is_eq: bool) -> bool {
    let EdgeLabel::Affine(t) = &edge.label else {
        return false; // MILM-labeled edges contribute no strengthening here
    };
    let set = edge_source_set(model, edge, t);
    let composed = expr.pullback(&stacked_map(t), &t.e);
    if is_eq {
        set.implies_nonneg(&composed) && set.implies_nonneg(&composed.neg())
    } else {
        set.implies_nonneg(&composed)
    }
}

/// Equality candidates from one edge: rows x_l <- f(y) whose read set is
/// untouched by the full update yield x_l - f(y) = 0 at the target node.
fn equality_candidates(t: &TransitionLabel) -> Vec<AffExpr> {
    let n = t.n();
    let unchanged: Vec<bool> = (0..n)
        .map(|m| {
            let ident_row = (0..n).all(|j| {
                let want = if j == m { crate::rat::rat(1) } else { Rat::zero() };
                t.a[(m, j)] == want
            });
            ident_row
                && t.e[m].is_zero()
                && (0..t.n_w()).all(|j| t.b[(m, j)].is_zero())
                && (0..t.n_v()).all(|j| t.c[(m, j)].is_zero())
        })
        .collect();
    let mut out = Vec::new();
    for l in 0..n {
        if unchanged[l] {
            continue;
        }
        let row_det = (0..t.n_w()).all(|j| t.b[(l, j)].is_zero())
            && (0..t.n_v()).all(|j| t.c[(l, j)].is_zero());
        if !row_det {
            continue;
        }
        let reads_ok = (0..n).all(|m| t.a[(l, m)].is_zero() || unchanged[m]);
        if !reads_ok {
            continue;
        }
        // x_l - (A[l,:] x + e_l) = 0 over the successor state
        let mut expr = AffExpr::zero(n);
        expr.coeffs[l] = crate::rat::rat(1);
        for m in 0..n {
            expr.coeffs[m] = &expr.coeffs[m] - &t.a[(l, m)];
        }
        expr.constant = -t.e[l].clone();
        out.push(expr);
    }
    out
}

/// Greatest-fixpoint region of one equality candidate: the largest node set
/// R (excluding the start node) such that every edge into R either
/// establishes the equality outright or preserves it from a source already
/// in R. States reachable at R-nodes then satisfy the equality by induction
/// over trace prefixes.
fn inductive_region(model: &GraphModel, cand: &AffExpr) -> Vec<NodeId> {
    let mut in_region: Vec<bool> = (0..model.num_nodes()).map(|i| i != model.start).collect();
    loop {
        let mut changed = false;
        for node in 0..model.num_nodes() {
            if !in_region[node] {
                continue;
            }
            let ok = model.edges.iter().filter(|e| e.to == node).all(|edge| {
                let mut src = model.clone();
                if in_region[edge.from] {
                    // assume the candidate at the source
                    src.invariants[edge.from].lin_eq.push(cand.clone());
                }
                holds_on_edge(&src, edge, cand, true)
            });
            if !ok {
                in_region[node] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..model.num_nodes()).filter(|&i| in_region[i]).collect()
}

/// Strengthens node invariants for `rounds` rounds and returns the new model.
/// Non-invertible or uncertain transitions simply contribute nothing.
pub fn propagate_invariants(model: &GraphModel, rounds: usize) -> GraphModel {
    let mut m = model.clone();
    let n = m.n();
    // assignment-generated equalities spread over their full inductive
    // regions first (loops make the per-round pass too pessimistic)
    let mut global_eq_candidates: Vec<AffExpr> = Vec::new();
    for edge in &m.edges {
        if let EdgeLabel::Affine(t) = &edge.label {
            for cand in equality_candidates(t) {
                if !global_eq_candidates.contains(&cand) {
                    global_eq_candidates.push(cand);
                }
            }
        }
    }
    for cand in &global_eq_candidates {
        for node in inductive_region(&m, cand) {
            if !m.invariants[node].lin_eq.contains(cand) {
                m.invariants[node].lin_eq.push(cand.clone());
            }
        }
    }
    for inv in m.invariants.iter_mut() {
        inv.dedup();
    }
    for _ in 0..rounds {
        let snapshot = m.clone();
        for node in 0..m.num_nodes() {
            if node == m.start {
                continue;
            }
            let incoming: Vec<&Edge> = snapshot.edges.iter().filter(|e| e.to == node).collect();
            if incoming.is_empty() {
                continue;
            }
            let mut eq_candidates: Vec<AffExpr> = Vec::new();
            let mut ineq_candidates: Vec<AffExpr> = Vec::new();
            for edge in &incoming {
                let EdgeLabel::Affine(t) = &edge.label else { continue };
                eq_candidates.extend(equality_candidates(t));
                // pre-image pullback for invertible deterministic labels
                if t.is_deterministic() {
                    if let Some(a_inv) = t.a.inverse() {
                        let neg_e: Vec<Rat> = a_inv.matvec(&t.e).iter().map(|v| -v).collect();
                        let mut src = snapshot.invariants[edge.from].clone();
                        src.conjoin(&edge.passport);
                        let pulled = src.pullback(&a_inv, &neg_e);
                        eq_candidates.extend(pulled.lin_eq);
                        ineq_candidates.extend(pulled.lin_ineq);
                        if incoming.len() == 1 {
                            // quadratic pullbacks are only kept in the
                            // single-predecessor case (no cross-edge check)
                            for q in pulled.quad_ineq {
                                if !m.invariants[node].quad_ineq.contains(&q) {
                                    m.invariants[node].quad_ineq.push(q);
                                }
                            }
                            for q in pulled.quad_eq {
                                if !m.invariants[node].quad_eq.contains(&q) {
                                    m.invariants[node].quad_eq.push(q);
                                }
                            }
                        }
                    }
                }
            }
            let already = |inv: &SemialgebraicSet, e: &AffExpr, is_eq: bool| {
                if is_eq {
                    inv.lin_eq.contains(e)
                } else {
                    inv.lin_ineq.contains(e) || inv.implies_nonneg(e)
                }
            };
            for (cand, is_eq) in eq_candidates
                .into_iter()
                .map(|c| (c, true))
                .chain(ineq_candidates.into_iter().map(|c| (c, false)))
            {
                debug_assert_eq!(cand.dim(), n);
                if already(&m.invariants[node], &cand, is_eq) {
                    continue;
                }
                if incoming.iter().all(|e| holds_on_edge(&snapshot, e, &cand, is_eq)) {
                    if is_eq {
                        m.invariants[node].lin_eq.push(cand);
                    } else {
                        m.invariants[node].lin_ineq.push(cand);
                    }
                }
            }
            m.invariants[node].dedup();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    /// two-variable chain: n0 --(y := 3x)--> n1 --(x untouched)--> n2
    #[test]
    fn equality_preserved_along_chain() {
        let n = 2;
        let assign = TransitionLabel::deterministic(
            RMat::from_rows(vec![vec![rat(1), rat(0)], vec![rat(3), rat(0)]]),
            vec![rat(0), rat(0)],
        );
        let touch_other = TransitionLabel::deterministic(
            RMat::from_rows(vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]]),
            vec![rat(0), rat(0)],
        );
        let model = GraphModel {
            vars: vec!["x".into(), "y".into()],
            scale: rat(1),
            node_names: vec!["n0".into(), "n1".into(), "n2".into()],
            start: 0,
            terminal: 2,
            edges: vec![
                Edge {
                    from: 0,
                    to: 1,
                    k: 1,
                    label: EdgeLabel::Affine(assign),
                    passport: SemialgebraicSet::universal(n),
                },
                Edge {
                    from: 1,
                    to: 2,
                    k: 1,
                    label: EdgeLabel::Affine(touch_other),
                    passport: SemialgebraicSet::universal(n),
                },
            ],
            invariants: vec![SemialgebraicSet::universal(n); 3],
            unsafe_sets: vec![Vec::new(); 3],
            overflow: None,
        };
        let out = propagate_invariants(&model, 2);
        // y - 3x = 0 appears at n1 and survives to n2
        let holds = |node: usize| {
            out.invariants[node]
                .lin_eq
                .iter()
                .any(|e| e.coeffs == vec![rat(-3), rat(1)] && e.constant.is_zero())
        };
        assert!(holds(1), "{:?}", out.invariants[1]);
        assert!(holds(2), "{:?}", out.invariants[2]);
    }

    #[test]
    fn universal_incoming_leaves_node_unchanged() {
        let n = 1;
        let model = GraphModel {
            vars: vec!["x".into()],
            scale: rat(1),
            node_names: vec!["s".into(), "a".into(), "t".into()],
            start: 0,
            terminal: 2,
            edges: vec![
                Edge {
                    from: 0,
                    to: 1,
                    k: 1,
                    label: EdgeLabel::Affine(TransitionLabel::identity(n)),
                    passport: SemialgebraicSet::universal(n),
                },
                Edge {
                    from: 1,
                    to: 2,
                    k: 1,
                    label: EdgeLabel::Affine(TransitionLabel::identity(n)),
                    passport: SemialgebraicSet::universal(n),
                },
            ],
            invariants: vec![SemialgebraicSet::universal(n); 3],
            unsafe_sets: vec![Vec::new(); 3],
            overflow: None,
        };
        let out = propagate_invariants(&model, 2);
        assert!(out.invariants[1].is_universal());
    }
}
