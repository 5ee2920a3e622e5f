//! LMI/LP assembly for mixed-integer linear models: the quadratic-invariant
//! feasibility LMI, the overflow/termination pair, and the affine-invariant
//! characterizations (SDP and LP forms).
//!
//! Selector matrices over the extended vector x_e = (x, w, v, 1):
//! L1 = [F; L5] maps x_e to (x+, 1) on the constraint set, L2 picks (x, 1),
//! L3 picks (x, w), L4 picks v, L5 picks the constant 1.

use super::conic::{ConicProblem, VarKind, VarRef};
use crate::model::types::{MilmBlock, MilmInit};
use crate::rat::{rat, ratio, Rat};
use crate::rlinalg::RMat;
use num::{One, Signed, Zero};

pub struct Selectors {
    pub l1: RMat,
    pub l2: RMat,
    pub l3: RMat,
    pub l4: RMat,
    pub l5: RMat,
}

pub fn selectors(b: &MilmBlock) -> Selectors {
    let n = b.n;
    let n_e = b.n_e();
    let mut l1 = RMat::zeros(n + 1, n_e);
    for i in 0..n {
        for j in 0..n_e {
            l1[(i, j)] = b.f[(i, j)].clone();
        }
    }
    l1[(n, n_e - 1)] = Rat::one();
    let mut l2 = RMat::zeros(n + 1, n_e);
    for i in 0..n {
        l2[(i, i)] = Rat::one();
    }
    l2[(n, n_e - 1)] = Rat::one();
    let mut l3 = RMat::zeros(n + b.n_w, n_e);
    for i in 0..(n + b.n_w) {
        l3[(i, i)] = Rat::one();
    }
    let mut l4 = RMat::zeros(b.n_v, n_e);
    for i in 0..b.n_v {
        l4[(i, n + b.n_w + i)] = Rat::one();
    }
    let mut l5 = RMat::zeros(1, n_e);
    l5[(0, n_e - 1)] = Rat::one();
    Selectors { l1, l2, l3, l4, l5 }
}

/// Decision handles of one invariance LMI.
pub struct MilmQuadVars {
    pub p: VarRef,
    pub y: VarRef,
    pub dxw: VarRef,
    pub dv: Option<VarRef>,
}

#[derive(Clone, Debug)]
pub struct AssembleOpts {
    /// strictness slack: strict matrix inequalities become <= -eps I
    pub eps: Rat,
}

impl Default for AssembleOpts {
    fn default() -> Self {
        // the invariance/overflow inequalities are non-strict; strictness
        // slack is opted into where a result genuinely needs it
        AssembleOpts { eps: Rat::zero() }
    }
}

impl AssembleOpts {
    /// the configurable strict shift (<= -eps I for strict matrix
    /// inequalities)
    pub fn strict() -> Self {
        AssembleOpts { eps: ratio(1, 10_000_000) }
    }
}

/// Row matrix whose every row equals L5 (so W^T D W = trace(D) L5^T L5).
fn trace_rows(count: usize, l5: &RMat) -> RMat {
    let mut m = RMat::zeros(count, l5.c);
    for i in 0..count {
        m[(i, l5.c - 1)] = Rat::one();
    }
    m
}

/// Appends the invariance LMI
///   L1' P+ L1 - theta L2' P L2 <= He(Y H) + L3' Dxw L3 + L4' Dv L4
///                               - (trace(Dxw) + trace(Dv) + mu) L5' L5
/// for a (possibly distinct) pre/post pair of quadratic invariants. Fresh
/// multipliers per call.
#[allow(clippy::too_many_arguments)]
pub fn push_invariance_lmi(
    prob: &mut ConicProblem,
    b: &MilmBlock,
    p_pre: VarRef,
    p_post: VarRef,
    theta: &Rat,
    mu: &Rat,
    tag: &str,
    opts: &AssembleOpts,
) -> MilmQuadVars {
    let sel = selectors(b);
    let n_e = b.n_e();
    let y = prob.add_var(format!("Y[{tag}]"), VarKind::FreeMat(n_e, b.h.r));
    let dxw = prob.add_var(format!("Dxw[{tag}]"), VarKind::NonnegDiag(b.n + b.n_w));
    let dv = (b.n_v > 0).then(|| prob.add_var(format!("Dv[{tag}]"), VarKind::FreeDiag(b.n_v)));
    let blk = prob.new_block(n_e, tag);
    // RHS - LHS >= eps I   (block holds RHS - LHS - eps I >= 0)
    prob.block_add_congruence(blk, p_post, &sel.l1, &rat(-1));
    prob.block_add_congruence(blk, p_pre, &sel.l2, theta);
    prob.block_add_he_mat(blk, y, &b.h, &RMat::eye(n_e), &Rat::one());
    prob.block_add_diag_quad(blk, dxw, &sel.l3, &Rat::one());
    // -(trace Dxw) L5^T L5
    prob.block_add_diag_quad(blk, dxw, &trace_rows(b.n + b.n_w, &sel.l5), &rat(-1));
    if let Some(dv) = dv {
        prob.block_add_diag_quad(blk, dv, &sel.l4, &Rat::one());
        prob.block_add_diag_quad(blk, dv, &trace_rows(b.n_v, &sel.l5), &rat(-1));
    }
    // -mu L5^T L5 - eps I
    let mut konst = sel.l5.t().matmul(&sel.l5).scaled(&-mu.clone());
    konst = konst.sub(&RMat::eye(n_e).scaled(&opts.eps));
    prob.block_add_const(blk, &konst);
    MilmQuadVars { p: p_pre, y, dxw, dv }
}

/// Quadratic-invariant feasibility for one MILM at fixed rates.
pub fn assemble_milm_quadratic(
    b: &MilmBlock,
    theta: &Rat,
    mu: &Rat,
    opts: &AssembleOpts,
) -> (ConicProblem, VarRef) {
    assert!(!theta.is_negative(), "theta must be nonnegative");
    let mut prob = ConicProblem::new();
    let p = prob.add_var("P", VarKind::SymMat(b.n + 1));
    push_invariance_lmi(&mut prob, b, p, p, theta, mu, "invariance", opts);
    (prob, p)
}

/// Initial-set condition: [x0 1] P [x0 1]^T <= 0 per explicit state, or its
/// multiplier relaxation over the H0 polytope.
pub fn push_init_condition(
    prob: &mut ConicProblem,
    b: &MilmBlock,
    init: &MilmInit,
    p: VarRef,
    opts: &AssembleOpts,
) {
    match init {
        MilmInit::States(states) => {
            for x0 in states {
                let mut xbar = x0.clone();
                xbar.push(Rat::one());
                let mut coeffs: Vec<(usize, Rat)> = Vec::new();
                for a in 0..xbar.len() {
                    for bb in a..xbar.len() {
                        let factor = if a == bb { Rat::one() } else { rat(2) };
                        let val = &xbar[a] * &xbar[bb] * factor;
                        if !val.is_zero() {
                            coeffs.push((prob.sym_index(p, a, bb), -val));
                        }
                    }
                }
                // -V(x0) >= eps
                prob.lin_ineq.push(ConicProblem::row(coeffs, opts.eps.clone()));
            }
        }
        MilmInit::Polytope(h0) => {
            let b0 = MilmBlock { f: RMat::zeros(b.n, h0.c), h: h0.clone(), ..b.clone() };
            let sel = selectors(&b0);
            let n_e = b0.n_e();
            let y0 = prob.add_var("Y0", VarKind::FreeMat(n_e, h0.r));
            let d0 = prob.add_var("D0xw", VarKind::NonnegDiag(b.n + b.n_w));
            let d0v = (b.n_v > 0).then(|| prob.add_var("D0v", VarKind::FreeDiag(b.n_v)));
            let blk = prob.new_block(n_e, "initial-set");
            // -L2' P L2 + He(Y0 H0) + L3' D0 L3 - trace(D0) L5'L5 - eps I >= 0
            prob.block_add_congruence(blk, p, &sel.l2, &rat(-1));
            prob.block_add_he_mat(blk, y0, h0, &RMat::eye(n_e), &Rat::one());
            prob.block_add_diag_quad(blk, d0, &sel.l3, &Rat::one());
            prob.block_add_diag_quad(blk, d0, &trace_rows(b.n + b.n_w, &sel.l5), &rat(-1));
            if let Some(d0v) = d0v {
                prob.block_add_diag_quad(blk, d0v, &sel.l4, &Rat::one());
                prob.block_add_diag_quad(blk, d0v, &trace_rows(b.n_v, &sel.l5), &rat(-1));
            }
            prob.block_add_const(blk, &RMat::eye(n_e).scaled(&opts.eps).scaled(&rat(-1)));
        }
    }
}

/// Overflow/termination assembly: the invariance LMI, the initial-set
/// condition, and the overflow comparison
///   L1' (z Lambda) L1 - L2' P L2 <= (multiplier terms),
/// with Lambda = diag{alpha^-2, -1} over the scaled state. Feasibility
/// certifies that no execution leaves the alpha box; with mu > 0 and
/// theta + mu > 1 the termination bound follows.
pub fn assemble_milm_overflow(
    b: &MilmBlock,
    init: &MilmInit,
    theta: &Rat,
    mu: &Rat,
    alpha: &[Rat],
    z: &Rat,
    opts: &AssembleOpts,
) -> (ConicProblem, VarRef) {
    assert_eq!(alpha.len(), b.n);
    assert!(alpha.iter().all(|a| a.is_positive() && a <= &Rat::one()), "0 < alpha <= 1");
    assert!(z.is_positive());
    let mut prob = ConicProblem::new();
    let p = prob.add_var("P", VarKind::SymMat(b.n + 1));
    push_init_condition(&mut prob, b, init, p, opts);
    push_invariance_lmi(&mut prob, b, p, p, theta, mu, "invariance", opts);

    // overflow block: He(Y2 H) + L3' D2 L3 + L4' D2v L4 - trace L5'L5
    //                 - L1' (z Lambda) L1 + L2' P L2 >= 0
    let sel = selectors(b);
    let n_e = b.n_e();
    let y2 = prob.add_var("Y2", VarKind::FreeMat(n_e, b.h.r));
    let d2 = prob.add_var("D2xw", VarKind::NonnegDiag(b.n + b.n_w));
    let d2v = (b.n_v > 0).then(|| prob.add_var("D2v", VarKind::FreeDiag(b.n_v)));
    let blk = prob.new_block(n_e, "overflow");
    let mut lambda = RMat::zeros(b.n + 1, b.n + 1);
    for i in 0..b.n {
        lambda[(i, i)] = z / (&alpha[i] * &alpha[i]);
    }
    lambda[(b.n, b.n)] = -z.clone();
    let l1t_lam_l1 = sel.l1.t().matmul(&lambda).matmul(&sel.l1);
    prob.block_add_const(blk, &l1t_lam_l1.scaled(&rat(-1)));
    prob.block_add_congruence(blk, p, &sel.l2, &Rat::one());
    prob.block_add_he_mat(blk, y2, &b.h, &RMat::eye(n_e), &Rat::one());
    prob.block_add_diag_quad(blk, d2, &sel.l3, &Rat::one());
    prob.block_add_diag_quad(blk, d2, &trace_rows(b.n + b.n_w, &sel.l5), &rat(-1));
    if let Some(d2v) = d2v {
        prob.block_add_diag_quad(blk, d2v, &sel.l4, &Rat::one());
        prob.block_add_diag_quad(blk, d2v, &trace_rows(b.n_v, &sel.l5), &rat(-1));
    }
    prob.block_add_const(blk, &RMat::eye(n_e).scaled(&opts.eps).scaled(&rat(-1)));
    (prob, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearMode {
    Sdp,
    /// LP with binaries relaxed to the box
    LpRelax,
    /// LP with one multiplier family per binary vertex (cap applies)
    LpVertex,
}

pub struct LinearVars {
    /// coefficient vector K (absent when fixed)
    pub k: Option<VarRef>,
    /// decision theta when K is fixed
    pub theta: Option<VarRef>,
}

pub const VERTEX_CAP: usize = 12;

/// Affine-invariant characterization: find K (or, for fixed K, a rate theta)
/// with V(x) = K' [x;1] a valid invariant at the given rates.
pub fn assemble_milm_linear(
    b: &MilmBlock,
    theta: &Rat,
    mu: &Rat,
    mode: LinearMode,
    fixed_k: Option<&[Rat]>,
    opts: &AssembleOpts,
) -> Result<(ConicProblem, LinearVars), String> {
    let sel = selectors(b);
    let n_e = b.n_e();
    let mut prob = ConicProblem::new();
    let (k, theta_var) = match fixed_k {
        None => (Some(prob.add_var("K", VarKind::FreeMat(b.n + 1, 1))), None),
        Some(kv) => {
            assert_eq!(kv.len(), b.n + 1);
            (None, Some(prob.add_var("theta", VarKind::NonnegScalar)))
        }
    };

    match mode {
        LinearMode::Sdp => {
            // strict characterization: shift by the strict eps when the
            // caller left the slack at zero
            let eps = if opts.eps.is_zero() { ratio(1, 10_000_000) } else { opts.eps.clone() };
            let y = prob.add_var("Y", VarKind::FreeMat(n_e, b.h.r));
            let dxw = prob.add_var("Dxw", VarKind::NonnegDiag(b.n + b.n_w));
            let dv = (b.n_v > 0).then(|| prob.add_var("Dv", VarKind::FreeDiag(b.n_v)));
            let blk = prob.new_block(n_e, "linear-invariance");
            match (k, fixed_k) {
                (Some(kv), None) => {
                    // -He(L1' K L5) + theta He(L2' K L5)
                    prob.block_add_he_general(blk, kv, &sel.l1.t(), &sel.l5, &rat(-1));
                    prob.block_add_he_general(blk, kv, &sel.l2.t(), &sel.l5, theta);
                }
                (None, Some(kfix)) => {
                    let kmat = RMat::from_rows(kfix.iter().map(|v| vec![v.clone()]).collect());
                    let fixed1 = sel.l1.t().matmul(&kmat).matmul(&sel.l5);
                    let he1 = fixed1.add(&fixed1.t());
                    prob.block_add_const(blk, &he1.scaled(&rat(-1)));
                    let fixed2 = sel.l2.t().matmul(&kmat).matmul(&sel.l5);
                    let he2 = fixed2.add(&fixed2.t());
                    prob.block_add_scalar_mat(blk, theta_var.unwrap(), &he2, &Rat::one());
                }
                _ => unreachable!(),
            }
            prob.block_add_he_mat(blk, y, &b.h, &RMat::eye(n_e), &Rat::one());
            prob.block_add_diag_quad(blk, dxw, &sel.l3, &Rat::one());
            prob.block_add_diag_quad(blk, dxw, &trace_rows(b.n + b.n_w, &sel.l5), &rat(-1));
            if let Some(dv) = dv {
                prob.block_add_diag_quad(blk, dv, &sel.l4, &Rat::one());
                prob.block_add_diag_quad(blk, dv, &trace_rows(b.n_v, &sel.l5), &rat(-1));
            }
            let mut konst = sel.l5.t().matmul(&sel.l5).scaled(&-mu.clone());
            konst = konst.sub(&RMat::eye(n_e).scaled(&eps));
            prob.block_add_const(blk, &konst);
        }
        LinearMode::LpRelax => {
            push_linear_lp(&mut prob, b, &sel, theta, mu, k, theta_var, fixed_k, None)?;
        }
        LinearMode::LpVertex => {
            if b.n_v > VERTEX_CAP {
                return Err(format!(
                    "vertex enumeration requested with n_v = {} > cap {VERTEX_CAP}",
                    b.n_v
                ));
            }
            for bits in 0..(1u32 << b.n_v) {
                let v: Vec<Rat> = (0..b.n_v)
                    .map(|i| if bits >> i & 1 == 1 { Rat::one() } else { rat(-1) })
                    .collect();
                push_linear_lp(&mut prob, b, &sel, theta, mu, k, theta_var, fixed_k, Some(&v))?;
            }
        }
    }
    Ok((prob, LinearVars { k, theta: theta_var }))
}

/// One LP certificate family: K'L1 - theta K'L2 = Y H + (Dlo - Dhi) L3
///   [+ (Dvlo - Dvhi) L4] + c0 L5, with c0 + sum(Dhi + Dlo) <= -mu.
/// With `vertex` set, the binary block of H is folded at that vertex and the
/// L4 terms disappear.
#[allow(clippy::too_many_arguments)]
fn push_linear_lp(
    prob: &mut ConicProblem,
    b: &MilmBlock,
    sel: &Selectors,
    theta: &Rat,
    mu: &Rat,
    k: Option<VarRef>,
    theta_var: Option<VarRef>,
    fixed_k: Option<&[Rat]>,
    vertex: Option<&[Rat]>,
) -> Result<(), String> {
    let n_e = b.n_e();
    let tag = vertex.map(|v| format!("@{v:?}")).unwrap_or_default();
    let n_box = b.n + b.n_w;
    let y = prob.add_var(format!("Ylp{tag}"), VarKind::FreeMat(1, b.h.r));
    let dhi = prob.add_var(format!("Dhi{tag}"), VarKind::NonnegDiag(n_box));
    let dlo = prob.add_var(format!("Dlo{tag}"), VarKind::NonnegDiag(n_box));
    let (dvhi, dvlo) = if b.n_v > 0 && vertex.is_none() {
        (
            Some(prob.add_var(format!("Dvhi{tag}"), VarKind::NonnegDiag(b.n_v))),
            Some(prob.add_var(format!("Dvlo{tag}"), VarKind::NonnegDiag(b.n_v))),
        )
    } else {
        (None, None)
    };
    let c0 = prob.add_var(format!("c0{tag}"), VarKind::Scalar);

    // fold a vertex into H: v columns go to the constant column
    let h_eff = match vertex {
        None => b.h.clone(),
        Some(v) => {
            let mut h = b.h.clone();
            for r in 0..h.r {
                let mut add = Rat::zero();
                for (i, vv) in v.iter().enumerate() {
                    add += &h[(r, b.n + b.n_w + i)] * vv;
                    h[(r, b.n + b.n_w + i)] = Rat::zero();
                }
                h[(r, n_e - 1)] = &h[(r, n_e - 1)] + &add;
            }
            h
        }
    };
    // coefficient equation per x_e coordinate; at a fixed vertex the v
    // coordinates are skipped (their equation is absorbed in the constant)
    for coord in 0..n_e {
        let is_v_coord = coord >= b.n + b.n_w && coord < n_e - 1;
        if is_v_coord && vertex.is_some() {
            continue;
        }
        let mut row: Vec<(usize, Rat)> = Vec::new();
        // K' L1 - theta K' L2 (with the vertex folded into L1's v columns)
        let l1_coord = |a: usize| {
            let mut val = b.f[(a, coord)].clone();
            if let Some(v) = vertex {
                if coord == n_e - 1 {
                    for (i, vv) in v.iter().enumerate() {
                        val += &b.f[(a, b.n + b.n_w + i)] * vv;
                    }
                }
            }
            val
        };
        let l1_skip_v = |a: usize| {
            if vertex.is_some() && coord >= b.n + b.n_w && coord < n_e - 1 {
                Rat::zero()
            } else {
                l1_coord(a)
            }
        };
        match (k, fixed_k) {
            (Some(kv), None) => {
                for a in 0..(b.n + 1) {
                    // L1 row a at coord: rows of F, plus the 1-row
                    let f_val = if a < b.n { l1_skip_v(a) } else { sel.l5[(0, coord)].clone() };
                    if !f_val.is_zero() {
                        row.push((prob.mat_index(kv, a, 0), f_val));
                    }
                    let l2_val = sel.l2[(a, coord)].clone();
                    if !l2_val.is_zero() {
                        row.push((prob.mat_index(kv, a, 0), -(theta * l2_val)));
                    }
                }
            }
            (None, Some(kfix)) => {
                // constant K' L1 moves to rhs; theta (K' L2) is the decision
                let mut kl2 = Rat::zero();
                for a in 0..(b.n + 1) {
                    kl2 += &kfix[a] * &sel.l2[(a, coord)];
                }
                if !kl2.is_zero() {
                    row.push((prob.scalar_index(theta_var.unwrap()), -kl2));
                }
            }
            _ => unreachable!(),
        }
        // - Y H
        for hr in 0..h_eff.r {
            let val = h_eff[(hr, coord)].clone();
            if !val.is_zero() {
                row.push((prob.mat_index(y, 0, hr), -val));
            }
        }
        // - (Dlo - Dhi) L3
        if coord < n_box {
            row.push((prob.diag_index(dlo, coord), rat(-1)));
            row.push((prob.diag_index(dhi, coord), Rat::one()));
        }
        if is_v_coord {
            let vi = coord - n_box;
            if let (Some(dvhi), Some(dvlo)) = (dvhi, dvlo) {
                row.push((prob.diag_index(dvlo, vi), rat(-1)));
                row.push((prob.diag_index(dvhi, vi), Rat::one()));
            }
        }
        // - c0 L5
        if coord == n_e - 1 {
            row.push((prob.scalar_index(c0), rat(-1)));
        }
        // rhs: the constant part of K'L1 when K is fixed
        let rhs = match fixed_k {
            Some(kfix) => {
                let mut kl1 = Rat::zero();
                for a in 0..b.n {
                    kl1 += &kfix[a] * &l1_skip_v(a);
                }
                kl1 += &kfix[b.n] * &sel.l5[(0, coord)];
                -kl1
            }
            None => Rat::zero(),
        };
        prob.lin_eq.push(ConicProblem::row(row, rhs));
    }
    // c0 + sum(Dhi + Dlo) [+ sum(Dvhi + Dvlo)] <= -mu
    let mut srow: Vec<(usize, Rat)> = vec![(prob.scalar_index(c0), rat(-1))];
    for i in 0..n_box {
        srow.push((prob.diag_index(dhi, i), rat(-1)));
        srow.push((prob.diag_index(dlo, i), rat(-1)));
    }
    if let (Some(dvhi), Some(dvlo)) = (dvhi, dvlo) {
        for i in 0..b.n_v {
            srow.push((prob.diag_index(dvhi, i), rat(-1)));
            srow.push((prob.diag_index(dvlo, i), rat(-1)));
        }
    }
    prob.lin_ineq.push(ConicProblem::row(srow, mu.clone()));
    Ok(())
}

/// The simple-form linear system K'L1 - theta K'L2 + L5 = 0 (a subset of the
/// LP characterization at c0 = -1 with zero multipliers), kept as a fast
/// special case for round-based searches.
pub fn simple_form_rows(b: &MilmBlock, theta: &Rat) -> (RMat, Vec<Rat>) {
    let sel = selectors(b);
    let n_e = b.n_e();
    // unknowns K in R^{n+1}; one equation per coordinate
    let mut a = RMat::zeros(n_e, b.n + 1);
    let mut rhs = vec![Rat::zero(); n_e];
    for coord in 0..n_e {
        for i in 0..(b.n + 1) {
            let l1 = if i < b.n { b.f[(i, coord)].clone() } else { sel.l5[(0, coord)].clone() };
            let l2 = sel.l2[(i, coord)].clone();
            a[(coord, i)] = l1 - theta * l2;
        }
        rhs[coord] = -sel.l5[(0, coord)].clone();
    }
    (a, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::lp::{solve, LpStatus};
    use crate::solver::sdp::{solve_sdp, SdpSettings, SdpStatus};

    /// x+ = 1/2 x with x in [-1,1]; no constraints (H empty), n_w = n_v = 0
    fn contraction() -> MilmBlock {
        let f = RMat::from_rows(vec![vec![ratio(1, 2), Rat::zero()]]);
        let h = RMat::zeros(0, 2);
        MilmBlock { f, h, n: 1, n_w: 0, n_v: 0 }
    }

    #[test]
    fn selector_shapes_and_identity() {
        let b = MilmBlock {
            f: RMat::zeros(2, 7),
            h: RMat::zeros(3, 7),
            n: 2,
            n_w: 3,
            n_v: 1,
        };
        let s = selectors(&b);
        assert_eq!((s.l1.r, s.l1.c), (3, 7));
        assert_eq!((s.l2.r, s.l2.c), (3, 7));
        assert_eq!((s.l3.r, s.l3.c), (5, 7));
        assert_eq!((s.l4.r, s.l4.c), (1, 7));
        assert_eq!((s.l5.r, s.l5.c), (1, 7));
        // L2 x_e = (x, 1) and L5 x_e = 1
        let xe: Vec<Rat> = (1..=7).map(rat).collect();
        let x2 = s.l2.matvec(&xe);
        assert_eq!(x2, vec![rat(1), rat(2), rat(7)]);
        assert_eq!(s.l4.matvec(&xe), vec![rat(6)]);
    }

    #[test]
    fn quadratic_invariance_feasible_for_contraction() {
        let b = contraction();
        let (prob, _p) = assemble_milm_quadratic(&b, &Rat::one(), &Rat::zero(), &Default::default());
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible);
    }

    #[test]
    fn overflow_feasible_for_contraction_and_infeasible_for_expansion() {
        let stay = contraction();
        let init = MilmInit::States(vec![vec![ratio(1, 2)]]);
        let (prob, _) = assemble_milm_overflow(
            &stay,
            &init,
            &Rat::one(),
            &Rat::zero(),
            &[Rat::one()],
            &Rat::one(),
            &Default::default(),
        );
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible);

        // x+ = 2x from 1/2 overflows past 1
        let grow = MilmBlock {
            f: RMat::from_rows(vec![vec![rat(2), Rat::zero()]]),
            h: RMat::zeros(0, 2),
            n: 1,
            n_w: 0,
            n_v: 0,
        };
        let (prob, _) = assemble_milm_overflow(
            &grow,
            &init,
            &Rat::one(),
            &Rat::zero(),
            &[Rat::one()],
            &Rat::one(),
            &Default::default(),
        );
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Infeasible);
    }

    #[test]
    fn linear_lp_zero_k_feasible_iff_mu_zero() {
        // K = 0: V = 0; invariance needs 0 <= -mu
        let b = contraction();
        let (prob, _) = assemble_milm_linear(
            &b,
            &Rat::one(),
            &Rat::zero(),
            LinearMode::LpRelax,
            Some(&[Rat::zero(), Rat::zero()]),
            &Default::default(),
        )
        .unwrap();
        let lp = prob.lower_lp().unwrap();
        assert_eq!(solve(&lp).status, LpStatus::Optimal);

        let (prob, _) = assemble_milm_linear(
            &b,
            &Rat::one(),
            &Rat::one(),
            LinearMode::LpRelax,
            Some(&[Rat::zero(), Rat::zero()]),
            &Default::default(),
        )
        .unwrap();
        let lp = prob.lower_lp().unwrap();
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn simple_form_matches_direct_solve() {
        // V(x) = -x is the canonical decreasing invariant of x+ = x - 1
        // encoded as F = [1 0 -1] padded: n=1, n_w=0, n_v=0, x_e=(x,1)
        let b = MilmBlock {
            f: RMat::from_rows(vec![vec![Rat::one(), rat(-1)]]),
            h: RMat::zeros(0, 2),
            n: 1,
            n_w: 0,
            n_v: 0,
        };
        let (a, rhs) = simple_form_rows(&b, &Rat::one());
        let k = a.solve_any(&rhs).unwrap();
        // K' L1 - K' L2 + L5 = 0: V(x+) - V(x) = -1
        // => k0 (x - 1) + k1 - (k0 x + k1) + 1 = 0 -> -k0 + 1 = 0 -> k0 = 1
        assert_eq!(k[0], Rat::one());
    }
}
