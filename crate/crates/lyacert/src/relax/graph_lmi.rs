//! SDP assembly for quasi-linear graph models: node-wise quadratic invariants
//! with per-edge invariance LMIs and overflow-comparison LMIs over the edge
//! vector xi = (x, w, 1).
//!
//! Edge matrices: F = [A B E; 0 0 1] maps xi to the successor (x+, 1),
//! L picks (x, 1), W picks w, K picks the constant.
//!
//! Multiplier families per edge: free Y on equality rows, nonnegative scalars
//! on inequality rows (paired with the constant row), nonpositive scalars on
//! quadratic inequality forms, free scalars on quadratic equality forms,
//! nonnegative diagonal D on the w box, optional pairwise products of
//! inequality rows with entrywise-nonnegative weights.

use super::conic::{ConicProblem, VarKind, VarRef};
use super::rates::RatePlan;
use crate::model::semialg::SemialgebraicSet;
use crate::model::types::{EdgeLabel, GraphModel};
use crate::rat::{rat, ratio, Rat};
use crate::rlinalg::RMat;
use num::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphMethod {
    /// one Lambda over all coordinates (2-norm bound)
    Joint,
    /// node-level z*Lambda_i - P_i <= 0 instead of edge overflow LMIs
    Simplified,
    /// Lambda supported on a single coordinate (inf-norm bound, one solve
    /// per coordinate)
    PerCoordinate(usize),
}

#[derive(Clone, Debug)]
pub struct GraphLmiOpts {
    pub method: GraphMethod,
    /// z scaling of Lambda (Remark-style conditioning aid); the reported
    /// sup-bound normalization becomes z instead of 1
    pub z: Rat,
    /// share one multiplier family across same-shape edges
    pub shared_multipliers: bool,
    /// append pairwise products of linear constraint rows
    pub products: bool,
    pub eps: Rat,
}

impl Default for GraphLmiOpts {
    fn default() -> Self {
        GraphLmiOpts {
            method: GraphMethod::Joint,
            z: Rat::one(),
            shared_multipliers: false,
            products: true,
            eps: Rat::zero(),
        }
    }
}

#[derive(Debug)]
pub struct GraphLmiVars {
    /// per node: the quadratic invariant's matrix variable (start node has
    /// none; its outgoing edges use the theta = 0 convention)
    pub p: Vec<Option<VarRef>>,
}

/// Linear/quadratic description of one edge's pre-state set over xi:
/// equality rows, inequality rows, quadratic >= 0 forms, quadratic == 0
/// forms. All exact.
pub struct EdgeGeometry {
    pub dim: usize,
    pub f: RMat,
    pub l: RMat,
    pub w: RMat,
    pub k: RMat,
    pub eq_rows: Vec<Vec<Rat>>,
    pub ineq_rows: Vec<Vec<Rat>>,
    pub quad_ineq: Vec<RMat>,
    pub quad_eq: Vec<RMat>,
}

/// Builds the xi-space geometry of an edge: transition matrices plus the
/// constraint description of X_from /\ passport /\ label constraints, with
/// the w box as quadratic rows handled separately via D.
pub fn edge_geometry(model: &GraphModel, edge_idx: usize) -> Result<EdgeGeometry, String> {
    let edge = &model.edges[edge_idx];
    let EdgeLabel::Affine(t) = &edge.label else {
        return Err(format!(
            "edge {}->{} k{} carries a mixed-integer block; quasi-linear assembly needs \
             affine labels",
            model.node_names[edge.from], model.node_names[edge.to], edge.k
        ));
    };
    if t.n_v() > 0 {
        return Err(format!(
            "edge {}->{} k{} has binary selectors in its transition label; model them as \
             state variables first",
            model.node_names[edge.from], model.node_names[edge.to], edge.k
        ));
    }
    let n = model.n();
    let q = t.n_w();
    let dim = n + q + 1;
    let mut f = RMat::zeros(n + 1, dim);
    for i in 0..n {
        for j in 0..n {
            f[(i, j)] = t.a[(i, j)].clone();
        }
        for j in 0..q {
            f[(i, n + j)] = t.b[(i, j)].clone();
        }
        f[(i, dim - 1)] = t.e[i].clone();
    }
    f[(n, dim - 1)] = Rat::one();
    let mut l = RMat::zeros(n + 1, dim);
    for i in 0..n {
        l[(i, i)] = Rat::one();
    }
    l[(n, dim - 1)] = Rat::one();
    let mut w = RMat::zeros(q, dim);
    for i in 0..q {
        w[(i, n + i)] = Rat::one();
    }
    let mut k = RMat::zeros(1, dim);
    k[(0, dim - 1)] = Rat::one();

    // constraint description over xi
    let mut eq_rows = Vec::new();
    let mut ineq_rows = Vec::new();
    let mut quad_ineq = Vec::new();
    let mut quad_eq = Vec::new();
    let mut add_set = |set: &SemialgebraicSet, xbar_level: bool| {
        // xbar-level sets live over x; xi-level sets over (x, w)
        let place_aff = |coeffs: &[Rat], constant: &Rat| -> Vec<Rat> {
            let mut row = vec![Rat::zero(); dim];
            if xbar_level {
                row[..n].clone_from_slice(coeffs);
            } else {
                row[..coeffs.len()].clone_from_slice(coeffs);
            }
            row[dim - 1] = constant.clone();
            row
        };
        let place_quad = |m: &RMat| -> RMat {
            // embed a (d+1)x(d+1) form into xi-space: the homogenizing
            // row/column moves to the constant slot
            let d = m.r - 1;
            let mut out = RMat::zeros(dim, dim);
            for a in 0..=d {
                let ia = if a == d { dim - 1 } else { a };
                for b in 0..=d {
                    let ib = if b == d { dim - 1 } else { b };
                    out[(ia, ib)] = m[(a, b)].clone();
                }
            }
            out
        };
        for e in &set.lin_eq {
            eq_rows.push(place_aff(&e.coeffs, &e.constant));
        }
        for e in &set.lin_ineq {
            ineq_rows.push(place_aff(&e.coeffs, &e.constant));
        }
        for qf in &set.quad_ineq {
            quad_ineq.push(place_quad(&qf.mat));
        }
        for qf in &set.quad_eq {
            quad_eq.push(place_quad(&qf.mat));
        }
    };
    add_set(&model.invariants[edge.from], true);
    add_set(&edge.passport, true);
    if !t.constraint.is_universal() {
        // the label's constraint set is over (x, w, v); v is empty here
        add_set(&t.constraint, false);
    }
    Ok(EdgeGeometry { dim, f, l, w, k, eq_rows, ineq_rows, quad_ineq, quad_eq })
}

/// One multiplier family on a constraint description.
#[derive(Clone, Copy)]
struct Family {
    y: Option<VarRef>,
    z: Option<VarRef>,
    d: Option<VarRef>,
    eta: Option<VarRef>,
    rho: Option<VarRef>,
    prod: Option<VarRef>,
}

#[allow(clippy::too_many_arguments)]
fn push_family(
    prob: &mut ConicProblem,
    blk: usize,
    geo: &EdgeGeometry,
    tag: &str,
    opts: &GraphLmiOpts,
    reuse: Option<&Family>,
) -> Family {
    let dim = geo.dim;
    let fam = match reuse {
        Some(f) => Family { ..*f },
        None => Family {
            y: (!geo.eq_rows.is_empty()).then(|| {
                prob.add_var(format!("Y[{tag}]"), VarKind::FreeMat(dim, geo.eq_rows.len()))
            }),
            z: (!geo.ineq_rows.is_empty()).then(|| {
                prob.add_var(format!("z[{tag}]"), VarKind::NonnegDiag(geo.ineq_rows.len()))
            }),
            d: (geo.w.r > 0)
                .then(|| prob.add_var(format!("D[{tag}]"), VarKind::NonnegDiag(geo.w.r))),
            eta: (!geo.quad_ineq.is_empty()).then(|| {
                prob.add_var(format!("eta[{tag}]"), VarKind::NonnegDiag(geo.quad_ineq.len()))
            }),
            rho: (!geo.quad_eq.is_empty()).then(|| {
                prob.add_var(format!("rho[{tag}]"), VarKind::FreeDiag(geo.quad_eq.len()))
            }),
            prod: (opts.products && geo.ineq_rows.len() > 1).then(|| {
                let pairs = geo.ineq_rows.len() * (geo.ineq_rows.len() - 1) / 2;
                prob.add_var(format!("U[{tag}]"), VarKind::NonnegDiag(pairs))
            }),
        },
    };
    // He(Y * eq_rows): one free linear functional per equality row
    if let Some(y) = fam.y {
        let rows = RMat::from_rows(geo.eq_rows.clone());
        prob.block_add_he_mat(blk, y, &rows, &RMat::eye(dim), &Rat::one());
    }
    // one scalar per inequality row, paired with the constant row. On the
    // upper-bound side of the LMI the multiplier must be nonpositive (the
    // row value is nonnegative on the set), so the nonnegative variable
    // enters negated: RHS += -z_r * (g_r xi)(K xi).
    if let Some(z) = fam.z {
        for (r, row) in geo.ineq_rows.iter().enumerate() {
            let g = RMat::from_rows(vec![row.clone()]);
            let m = geo.k.t().matmul(&g);
            let he = m.add(&m.t());
            push_diag_mat(prob, blk, z, r, &he.scaled(&ratio(-1, 2)));
        }
    }
    if let Some(d) = fam.d {
        prob.block_add_diag_quad(blk, d, &geo.w, &Rat::one());
        // -trace(D) K^T K
        let mut ones = RMat::zeros(geo.w.r, dim);
        for i in 0..geo.w.r {
            ones[(i, dim - 1)] = Rat::one();
        }
        prob.block_add_diag_quad(blk, d, &ones, &rat(-1));
    }
    if let Some(eta) = fam.eta {
        for (s, qm) in geo.quad_ineq.iter().enumerate() {
            // eta_s <= 0: use a nonnegative variable on the negated form
            push_diag_mat(prob, blk, eta, s, &qm.scaled(&rat(-1)));
        }
    }
    if let Some(rho) = fam.rho {
        for (m, qm) in geo.quad_eq.iter().enumerate() {
            push_diag_mat(prob, blk, rho, m, qm);
        }
    }
    // pairwise products (g_r1 xi)(g_r2 xi) >= 0 on the set likewise enter
    // with nonpositive weight
    if let Some(prod) = fam.prod {
        let mut slot = 0usize;
        for r1 in 0..geo.ineq_rows.len() {
            for r2 in (r1 + 1)..geo.ineq_rows.len() {
                let a = RMat::from_rows(vec![geo.ineq_rows[r1].clone()]);
                let b = RMat::from_rows(vec![geo.ineq_rows[r2].clone()]);
                let m = a.t().matmul(&b);
                let he = m.add(&m.t());
                push_diag_mat(prob, blk, prod, slot, &he.scaled(&ratio(-1, 2)));
                slot += 1;
            }
        }
    }
    fam
}

/// coeff-matrix contribution of one component of a diagonal variable
fn push_diag_mat(prob: &mut ConicProblem, blk: usize, v: VarRef, i: usize, m: &RMat) {
    // represented through diag_quad on a crafted 1-row selector is not
    // possible for general matrices, so inject the term directly
    prob.block_add_diag_component(blk, v, i, m);
}

/// Assembles the node-wise quadratic feasibility problem. `alpha` is the
/// per-variable overflow limit vector defining Lambda = diag{alpha^-2, -1}.
pub fn assemble_graph_quadratic(
    model: &GraphModel,
    rates: &RatePlan,
    alpha: &[Rat],
    opts: &GraphLmiOpts,
) -> Result<(ConicProblem, GraphLmiVars), String> {
    let n = model.n();
    if alpha.len() != n {
        return Err("overflow limit vector must cover every variable".into());
    }
    if alpha.iter().any(|a| !a.is_positive()) {
        return Err("overflow limits must be positive".into());
    }
    if !opts.z.is_positive() {
        return Err("z scaling must be positive".into());
    }
    let mut prob = ConicProblem::new();
    let p: Vec<Option<VarRef>> = (0..model.num_nodes())
        .map(|i| {
            (i != model.start)
                .then(|| prob.add_var(format!("P[{}]", model.node_names[i]), VarKind::SymMat(n + 1)))
        })
        .collect();

    let lambda = {
        let mut m = RMat::zeros(n + 1, n + 1);
        for (i, a) in alpha.iter().enumerate() {
            let used = match &opts.method {
                GraphMethod::PerCoordinate(c) => i == *c,
                _ => true,
            };
            if used {
                m[(i, i)] = &opts.z / &(a * a);
            }
        }
        m[(n, n)] = -opts.z.clone();
        m
    };

    let mut shared: Vec<(usize, Family)> = Vec::new(); // keyed by geometry signature

    for (ei, edge) in model.edges.iter().enumerate() {
        // edges that can never fire impose no conditions
        {
            let mut gate = edge.passport.clone();
            gate.conjoin(&model.invariants[edge.from]);
            if !gate.lin_feasible() {
                continue;
            }
        }
        let geo = edge_geometry(model, ei)?;
        let (theta, mu) = rates
            .get(edge.from, edge.to, edge.k)
            .cloned()
            .ok_or_else(|| format!("no rates for edge {}", ei))?;
        if edge.from == model.start && !theta.is_zero() {
            return Err("edges out of the start node must carry theta = 0".into());
        }
        let tag = format!(
            "{}->{}k{}",
            model.node_names[edge.from], model.node_names[edge.to], edge.k
        );

        // invariance LMI
        let blk = prob.new_block(geo.dim, format!("invariance {tag}"));
        if let Some(pj) = p[edge.to] {
            prob.block_add_congruence(blk, pj, &geo.f, &rat(-1));
        } else {
            // terminal-to-terminal style edges into the start cannot exist
            return Err("edge into the start node is not allowed".into());
        }
        if let Some(pi) = p[edge.from] {
            if !theta.is_zero() {
                prob.block_add_congruence(blk, pi, &geo.l, &theta);
            }
        }
        let reuse_key = (geo.dim, geo.eq_rows.len(), geo.ineq_rows.len(), geo.quad_ineq.len(), geo.quad_eq.len());
        let fam = if opts.shared_multipliers {
            let sig = reuse_key.0 * 1_000_000
                + reuse_key.1 * 10_000
                + reuse_key.2 * 100
                + reuse_key.3 * 10
                + reuse_key.4;
            if let Some((_, f)) = shared.iter().find(|(s, _)| *s == sig) {
                push_family(&mut prob, blk, &geo, &tag, opts, Some(&Family { ..*f }))
            } else {
                let f = push_family(&mut prob, blk, &geo, &tag, opts, None);
                shared.push((sig, Family { ..f }));
                f
            }
        } else {
            push_family(&mut prob, blk, &geo, &tag, opts, None)
        };
        let _ = fam;
        let mut konst = geo.k.t().matmul(&geo.k).scaled(&-mu.clone());
        konst = konst.sub(&RMat::eye(geo.dim).scaled(&opts.eps));
        prob.block_add_const(blk, &konst);

        // overflow comparison LMI
        if !matches!(opts.method, GraphMethod::Simplified) {
            let blk2 = prob.new_block(geo.dim, format!("overflow {tag}"));
            let flf = geo.f.t().matmul(&lambda).matmul(&geo.f);
            prob.block_add_const(blk2, &flf.scaled(&rat(-1)));
            if let Some(pi) = p[edge.from] {
                prob.block_add_congruence(blk2, pi, &geo.l, &Rat::one());
            }
            // (edges out of the start node keep only the multiplier side:
            // successors of the initial set must sit inside the box outright)
            push_family(&mut prob, blk2, &geo, &format!("ov {tag}"), opts, None);
            prob.block_add_const(blk2, &RMat::eye(geo.dim).scaled(&opts.eps).scaled(&rat(-1)));
        }
    }

    if matches!(opts.method, GraphMethod::Simplified) {
        for (i, pvar) in p.iter().enumerate() {
            let Some(pv) = pvar else { continue };
            let blk = prob.new_block(n + 1, format!("node bound {}", model.node_names[i]));
            prob.block_add_congruence(blk, *pv, &RMat::eye(n + 1), &Rat::one());
            prob.block_add_const(blk, &lambda.scaled(&rat(-1)));
            prob.block_add_const(blk, &RMat::eye(n + 1).scaled(&opts.eps).scaled(&rat(-1)));
        }
    }

    Ok((prob, GraphLmiVars { p }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::semialg::SemialgebraicSet;
    use crate::model::types::*;
    use crate::solver::sdp::{solve_sdp, SdpSettings, SdpStatus};

    /// start -> a (x := x0 in [-1/2, 1/2]), a -> a (x := x/2)
    fn toy(contract: Rat) -> GraphModel {
        let n = 1;
        let mut init = SemialgebraicSet::universal(n);
        init.lin_ineq.push(crate::model::semialg::AffExpr {
            coeffs: vec![rat(1)],
            constant: ratio(1, 2),
        });
        init.lin_ineq.push(crate::model::semialg::AffExpr {
            coeffs: vec![rat(-1)],
            constant: ratio(1, 2),
        });
        GraphModel {
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
                    to: 1,
                    k: 1,
                    label: EdgeLabel::Affine(TransitionLabel::deterministic(
                        RMat::from_rows(vec![vec![contract]]),
                        vec![Rat::zero()],
                    )),
                    passport: SemialgebraicSet::universal(n),
                },
            ],
            invariants: vec![init, SemialgebraicSet::universal(n), SemialgebraicSet::universal(n)],
            unsafe_sets: vec![Vec::new(); 3],
            overflow: Some(vec![rat(1)]),
        }
    }

    #[test]
    fn contraction_is_certified_and_expansion_is_not() {
        let model = toy(ratio(1, 2));
        let rates = RatePlan::uniform(&model, Rat::one(), Rat::zero());
        let (prob, _) =
            assemble_graph_quadratic(&model, &rates, &[rat(1)], &Default::default()).unwrap();
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible, "margin {}", r.min_eig_margin);

        let model = toy(rat(2));
        let rates = RatePlan::uniform(&model, Rat::one(), Rat::zero());
        let (prob, _) =
            assemble_graph_quadratic(&model, &rates, &[rat(1)], &Default::default()).unwrap();
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Infeasible);
    }

    #[test]
    fn simplified_method_also_certifies() {
        let model = toy(ratio(1, 2));
        let rates = RatePlan::uniform(&model, Rat::one(), Rat::zero());
        let opts = GraphLmiOpts { method: GraphMethod::Simplified, ..Default::default() };
        let (prob, _) = assemble_graph_quadratic(&model, &rates, &[rat(1)], &opts).unwrap();
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible);
    }

    #[test]
    fn milm_labeled_edge_is_rejected() {
        let mut model = toy(ratio(1, 2));
        model.edges[1].label = EdgeLabel::Milm(MilmBlock {
            f: RMat::zeros(1, 2),
            h: RMat::zeros(0, 2),
            n: 1,
            n_w: 0,
            n_v: 0,
        });
        let rates = RatePlan::uniform(&model, Rat::one(), Rat::zero());
        let err = assemble_graph_quadratic(&model, &rates, &[rat(1)], &Default::default())
            .unwrap_err();
        assert!(err.contains("mixed-integer"), "{err}");
    }
}
