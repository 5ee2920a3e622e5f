//! Dense semidefinite feasibility/optimization by primal-dual path following
//! with Nesterov-Todd scaling.
//!
//! Problems arrive in the inequality ("dual") form
//!     min c.y   s.t.   F_b(y) = F_b0 + sum_i y_i F_bi  >= 0   for each block,
//! plus linear equalities on y, which a presolve eliminates exactly once by
//! Gaussian elimination. Feasibility questions run a phase-I shift
//!     min t  s.t.  F_b(y) + t I >= 0,  t >= -1,
//! which always has a strictly interior starting point; strict feasibility of
//! the original problem is t* < 0, and at an infeasible optimum the primal
//! iterate X normalizes into a Farkas ray (<F_bi, X> = 0, <F_b0, X> < 0).
//!
//! Blocks here are small and dense (a few hundred rows in total), so the
//! linear algebra is unblocked: Jacobi eigensolves, dense Cholesky for the
//! Schur complement.

use crate::linalg::Mat;

#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub dim: usize,
    /// constant matrix F_b0 (symmetric)
    pub konst: Mat,
    /// (variable index, symmetric coefficient matrix) pairs
    pub terms: Vec<(usize, Mat)>,
}

impl LmiBlock {
    pub fn eval(&self, y: &[f64]) -> Mat {
        let mut s = self.konst.clone();
        for (i, f) in &self.terms {
            s.add_scaled(f, y[*i]);
        }
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    pub num_vars: usize,
    /// minimized; empty for pure feasibility
    pub objective: Vec<(usize, f64)>,
    pub blocks: Vec<LmiBlock>,
    /// rows a.y = b
    pub lin_eq: Vec<(Vec<(usize, f64)>, f64)>,
    /// rows a.y >= b (lowered to 1x1 blocks)
    pub lin_ineq: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    /// feasibility tolerance on the phase-I shift: t* <= this is reported
    /// feasible (Lyapunov-style blocks are often tight in the constant
    /// coordinate, so problems may carry no interior at all; the exact
    /// rational re-check downstream is the real gate)
    pub marginal_tol: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            marginal_tol: 1e-7,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SdpStatus {
    /// feasibility mode: a strictly interior point was found
    Feasible,
    /// optimization mode: converged to an optimum
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericFailure,
}

#[derive(Clone, Debug)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub y: Vec<f64>,
    pub objective: f64,
    /// Farkas certificate blocks when status == Infeasible (may be absent for
    /// marginal problems)
    pub dual_ray: Option<Vec<Mat>>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// min over blocks of lambda_min(F_b(y)) on the original data
    pub min_eig_margin: f64,
    pub iterations: usize,
    /// phase-I optimum for feasibility problems
    pub phase1_shift: Option<f64>,
}

/// Presolved core problem: no equalities, inequalities lowered to 1x1 blocks.
struct Core {
    m: usize,
    c: Vec<f64>,
    blocks: Vec<LmiBlock>,
    /// y_orig = y0 + N z
    y0: Vec<f64>,
    nullspace: Option<Mat>, // m_orig x m
    var_scale: Vec<f64>,
}

fn build_core(p: &SdpProblem) -> Result<Core, SdpStatus> {
    let m_orig = p.num_vars;
    let mut blocks = p.blocks.clone();
    for (row, b) in &p.lin_ineq {
        let mut k = Mat::zeros(1, 1);
        k[(0, 0)] = -b;
        let mut terms: Vec<(usize, Mat)> = Vec::new();
        for &(i, a) in row {
            merge_term(&mut terms, i, &Mat::eye(1), a, 1);
        }
        blocks.push(LmiBlock { dim: 1, konst: k, terms });
    }

    // eliminate equalities: y = y0 + N z
    let (y0, nullspace) = if p.lin_eq.is_empty() {
        (vec![0.0; m_orig], None)
    } else {
        let k = p.lin_eq.len();
        let mut e = Mat::zeros(k, m_orig);
        let mut d = vec![0.0; k];
        for (i, (row, b)) in p.lin_eq.iter().enumerate() {
            for &(j, a) in row {
                e[(i, j)] += a;
            }
            d[i] = *b;
        }
        let scale = e.max_abs().max(1.0);
        // Gauss with full pivoting
        let mut piv: Vec<(usize, usize)> = Vec::new();
        let mut used_row = vec![false; k];
        let mut used_col = vec![false; m_orig];
        loop {
            let (mut br, mut bc, mut bv) = (0, 0, 0.0);
            for i in 0..k {
                if used_row[i] {
                    continue;
                }
                for j in 0..m_orig {
                    if !used_col[j] && e[(i, j)].abs() > bv {
                        bv = e[(i, j)].abs();
                        br = i;
                        bc = j;
                    }
                }
            }
            if bv <= 1e-11 * scale {
                break;
            }
            used_row[br] = true;
            used_col[bc] = true;
            piv.push((br, bc));
            let pk = e[(br, bc)];
            for i in 0..k {
                if i == br || e[(i, bc)] == 0.0 {
                    continue;
                }
                let f = e[(i, bc)] / pk;
                for j in 0..m_orig {
                    e[(i, j)] -= f * e[(br, j)];
                }
                e[(i, bc)] = 0.0;
                d[i] -= f * d[br];
            }
        }
        for i in 0..k {
            if !used_row[i] && d[i].abs() > 1e-7 * (1.0 + scale) {
                return Err(SdpStatus::Infeasible);
            }
        }
        // back-substitute pivot rows against each other so each pivot row
        // involves only its own pivot column among pivot columns
        for a in 0..piv.len() {
            for b in 0..piv.len() {
                if a == b {
                    continue;
                }
                let (ra, ca) = piv[a];
                let (rb, _) = piv[b];
                if e[(rb, ca)] != 0.0 {
                    let f = e[(rb, ca)] / e[(ra, ca)];
                    for j in 0..m_orig {
                        let upd = f * e[(ra, j)];
                        e[(rb, j)] -= upd;
                    }
                    e[(rb, ca)] = 0.0;
                    d[rb] -= f * d[ra];
                }
            }
        }
        let free_cols: Vec<usize> = (0..m_orig).filter(|j| !used_col[*j]).collect();
        let mut y0 = vec![0.0; m_orig];
        for &(r, c) in &piv {
            y0[c] = d[r] / e[(r, c)];
        }
        let mut n = Mat::zeros(m_orig, free_cols.len());
        for (zj, &fc) in free_cols.iter().enumerate() {
            n[(fc, zj)] = 1.0;
            for &(r, c) in &piv {
                n[(c, zj)] = -e[(r, fc)] / e[(r, c)];
            }
        }
        (y0, Some(n))
    };

    // substitute into blocks
    let m = nullspace.as_ref().map_or(m_orig, |n| n.c);
    let mut core_blocks = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let mut konst = b.konst.clone();
        for (i, f) in &b.terms {
            if y0[*i] != 0.0 {
                konst.add_scaled(f, y0[*i]);
            }
        }
        let mut terms: Vec<(usize, Mat)> = Vec::new();
        match &nullspace {
            None => {
                for (i, f) in &b.terms {
                    merge_term(&mut terms, *i, f, 1.0, b.dim);
                }
            }
            Some(n) => {
                for (i, f) in &b.terms {
                    for zj in 0..m {
                        let w = n[(*i, zj)];
                        if w != 0.0 {
                            merge_term(&mut terms, zj, f, w, b.dim);
                        }
                    }
                }
            }
        }
        terms.retain(|(_, f)| f.max_abs() > 1e-14 * konst.max_abs().max(1.0));
        core_blocks.push(LmiBlock { dim: b.dim, konst, terms });
    }

    // objective in z coordinates (constant offset re-added by caller)
    let mut c_orig = vec![0.0; m_orig];
    for &(i, v) in &p.objective {
        c_orig[i] += v;
    }
    let c = match &nullspace {
        None => c_orig.clone(),
        Some(n) => (0..m)
            .map(|zj| (0..m_orig).map(|i| c_orig[i] * n[(i, zj)]).sum())
            .collect(),
    };

    // per-variable equilibration
    let mut var_scale = vec![1.0; m];
    for (j, s) in var_scale.iter_mut().enumerate() {
        let mut mx: f64 = 0.0;
        for b in &core_blocks {
            for (i, f) in &b.terms {
                if *i == j {
                    mx = mx.max(f.max_abs());
                }
            }
        }
        if mx > 0.0 {
            *s = 1.0 / mx;
        }
    }
    for b in &mut core_blocks {
        for (i, f) in &mut b.terms {
            *f = f.scaled(var_scale[*i]);
        }
    }
    let c: Vec<f64> = c.iter().zip(&var_scale).map(|(v, s)| v * s).collect();

    Ok(Core { m, c, blocks: core_blocks, y0, nullspace, var_scale })
}

fn merge_term(terms: &mut Vec<(usize, Mat)>, idx: usize, f: &Mat, w: f64, dim: usize) {
    if let Some((_, acc)) = terms.iter_mut().find(|(i, _)| *i == idx) {
        acc.add_scaled(f, w);
    } else {
        let mut m = Mat::zeros(dim, dim);
        m.add_scaled(f, w);
        terms.push((idx, m));
    }
}

impl Core {
    fn restore_y(&self, z: &[f64]) -> Vec<f64> {
        let zs: Vec<f64> = z.iter().zip(&self.var_scale).map(|(v, s)| v * s).collect();
        match &self.nullspace {
            None => self.y0.iter().zip(&zs).map(|(a, b)| a + b).collect(),
            Some(n) => {
                let mut y = self.y0.clone();
                for i in 0..n.r {
                    for j in 0..n.c {
                        y[i] += n[(i, j)] * zs[j];
                    }
                }
                y
            }
        }
    }
}

/// NT scaling point W with W S W = X, from Cholesky factors of X and S.
fn nt_scaling(x: &Mat, s: &Mat) -> Option<Mat> {
    let l = x.cholesky()?;
    // eigen of L^T S L = V Sigma^2 V^T ; G = L V Sigma^{-1/2} ; W = G G^T
    let mut lts = l.t().matmul(&s.matmul(&l));
    lts.symmetrize();
    let (vals, v) = lts.sym_eigen();
    if vals.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
        return None;
    }
    let n = x.r;
    let mut g = l.matmul(&v);
    for j in 0..n {
        let f = 1.0 / vals[j].sqrt().sqrt();
        for i in 0..n {
            g[(i, j)] *= f;
        }
    }
    Some(g.matmul(&g.t()))
}

/// Largest alpha in (0,1] with M + alpha*D >= 0, dampened by tau.
fn step_len(m: &Mat, d: &Mat, tau: f64) -> f64 {
    let l = match m.cholesky() {
        Some(l) => l,
        None => return 1e-6,
    };
    // lambda_min of L^{-1} D L^{-T}
    let li_d = l.solve_lower_mat(d);
    let mut b = l.solve_lower_mat(&li_d.t());
    b.symmetrize();
    let emin = b.min_eig();
    if emin >= 0.0 {
        1.0
    } else {
        (tau * (-1.0 / emin)).min(1.0)
    }
}

struct IpmState {
    y: Vec<f64>,
    x: Vec<Mat>,
    s: Vec<Mat>,
}

enum IpmOutcome {
    Converged,
    IterationLimit,
    NumericFailure,
    Unbounded,
    /// feasibility-mode early exit: watched variable fell below its threshold
    EarlyExit,
}

/// Path-following loop on `min c.z s.t. blocks(z) >= 0` from a strictly
/// interior start. `early_exit = (index, threshold)` lets phase I stop as
/// soon as the shift variable is decisively negative.
fn ipm(
    blocks: &[LmiBlock],
    c: &[f64],
    state: &mut IpmState,
    settings: &SdpSettings,
    max_iter: usize,
    early_exit: Option<(usize, f64)>,
    iters_used: &mut usize,
) -> IpmOutcome {
    let m = c.len();
    let total_dim: usize = blocks.iter().map(|b| b.dim).sum();
    let norm_c = 1.0 + c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let norm_f0 = 1.0 + blocks.iter().fold(0.0f64, |a, b| a.max(b.konst.max_abs()));

    for it in 0..max_iter {
        *iters_used += 1;
        let s_of_y: Vec<Mat> = blocks.iter().map(|b| b.eval(&state.y)).collect();
        // R_d = F(y) - S  (driven to zero)
        let rd: Vec<Mat> = state
            .s
            .iter()
            .zip(&s_of_y)
            .map(|(s, f)| {
                let mut r = f.clone();
                r.add_scaled(s, -1.0);
                r
            })
            .collect();
        // r_p[i] = c_i - sum_b <F_bi, X_b>
        let mut rp: Vec<f64> = c.to_vec();
        for (b, x) in blocks.iter().zip(&state.x) {
            for (i, f) in &b.terms {
                rp[*i] -= f.dot(x);
            }
        }
        let gap: f64 = state.x.iter().zip(&state.s).map(|(x, s)| x.dot(s)).sum();
        let nu = gap / total_dim.max(1) as f64;
        let obj: f64 = c.iter().zip(&state.y).map(|(a, b)| a * b).sum();
        let prim_res = rp.iter().fold(0.0f64, |a, v| a.max(v.abs())) / norm_c;
        let dual_res = rd.iter().fold(0.0f64, |a, v| a.max(v.max_abs())) / norm_f0;

        if settings.verbose {
            eprintln!(
                "  ipm it={it} obj={obj:.6e} gap={gap:.3e} rp={prim_res:.3e} rd={dual_res:.3e}"
            );
        }
        if let Some((idx, thresh)) = early_exit {
            if state.y[idx] < thresh && dual_res < 1e-12 {
                return IpmOutcome::EarlyExit;
            }
        }
        if prim_res < settings.tol_feas
            && dual_res < settings.tol_feas
            && gap / (1.0 + obj.abs()) < settings.tol_gap
        {
            return IpmOutcome::Converged;
        }
        if obj < -1e14 {
            return IpmOutcome::Unbounded;
        }

        let mut w = Vec::with_capacity(blocks.len());
        for (x, s) in state.x.iter().zip(&state.s) {
            match nt_scaling(x, s) {
                Some(wb) => w.push(wb),
                None => return IpmOutcome::NumericFailure,
            }
        }
        // Schur complement M_ij = sum_b <F_i, W F_j W>
        let mut schur = Mat::zeros(m, m);
        for (b, wb) in blocks.iter().zip(&w) {
            let wf: Vec<(usize, Mat)> = b
                .terms
                .iter()
                .map(|(i, f)| (*i, wb.matmul(&f.matmul(wb))))
                .collect();
            for (i, fi) in &b.terms {
                for (j, wfj) in &wf {
                    if *j > *i {
                        continue;
                    }
                    let v = fi.dot(wfj);
                    schur[(*i, *j)] += v;
                    if i != j {
                        schur[(*j, *i)] += v;
                    }
                }
            }
        }
        let reg = 1e-13 * (1.0 + schur.max_abs());
        for i in 0..m {
            schur[(i, i)] += reg;
        }
        let chol = match schur.cholesky() {
            Some(l) => l,
            None => return IpmOutcome::NumericFailure,
        };
        let s_inv: Option<Vec<Mat>> = state
            .s
            .iter()
            .map(|s| {
                let l = s.cholesky()?;
                let li = l.solve_lower_mat(&Mat::eye(s.r));
                Some(li.t().matmul(&li))
            })
            .collect();
        let Some(s_inv) = s_inv else {
            return IpmOutcome::NumericFailure;
        };
        // W R_d W per block is sigma-independent
        let wrw: Vec<Mat> = w
            .iter()
            .zip(&rd)
            .map(|(wb, rdb)| wb.matmul(&rdb.matmul(wb)))
            .collect();

        let solve_direction = |sigma: f64| -> (Vec<f64>, Vec<Mat>, Vec<Mat>) {
            let mut h: Vec<f64> = c.iter().map(|v| -v).collect();
            for (bi, b) in blocks.iter().enumerate() {
                for (i, f) in &b.terms {
                    h[*i] += sigma * nu * f.dot(&s_inv[bi]) + f.dot(&wrw[bi]);
                }
            }
            let dy = chol.solve_lower_t(&chol.solve_lower(&h));
            let mut ds = Vec::with_capacity(blocks.len());
            let mut dx = Vec::with_capacity(blocks.len());
            for (bi, b) in blocks.iter().enumerate() {
                let mut dsb = rd[bi].scaled(-1.0);
                for (i, f) in &b.terms {
                    dsb.add_scaled(f, dy[*i]);
                }
                // dX = sigma*nu*S^-1 - X - W dS W
                let mut dxb = s_inv[bi].scaled(sigma * nu);
                dxb.add_scaled(&state.x[bi], -1.0);
                let wdsw = w[bi].matmul(&dsb.matmul(&w[bi]));
                dxb.add_scaled(&wdsw, -1.0);
                dxb.symmetrize();
                ds.push(dsb);
                dx.push(dxb);
            }
            (dy, dx, ds)
        };

        // predictor chooses sigma; corrector reuses the factorization
        let (_, dx_aff, ds_aff) = solve_direction(0.0);
        let tau = if it < 3 { 0.9 } else { 0.98 };
        let mut ap: f64 = 1.0;
        let mut ad: f64 = 1.0;
        for bi in 0..blocks.len() {
            ap = ap.min(step_len(&state.x[bi], &dx_aff[bi], tau));
            ad = ad.min(step_len(&state.s[bi], &ds_aff[bi], tau));
        }
        let gap_aff: f64 = state
            .x
            .iter()
            .zip(&dx_aff)
            .zip(state.s.iter().zip(&ds_aff))
            .map(|((x, dx), (s, ds))| {
                let mut xn = x.clone();
                xn.add_scaled(dx, ap);
                let mut sn = s.clone();
                sn.add_scaled(ds, ad);
                xn.dot(&sn)
            })
            .sum();
        let sigma = ((gap_aff / gap).max(0.0).powi(3)).clamp(1e-4, 0.8);

        let (dy, dx, ds) = solve_direction(sigma);
        let mut ap: f64 = 1.0;
        let mut ad: f64 = 1.0;
        for bi in 0..blocks.len() {
            ap = ap.min(step_len(&state.x[bi], &dx[bi], tau));
            ad = ad.min(step_len(&state.s[bi], &ds[bi], tau));
        }
        if ap < 1e-10 && ad < 1e-10 {
            return IpmOutcome::NumericFailure;
        }
        for i in 0..m {
            state.y[i] += ad * dy[i];
        }
        for bi in 0..blocks.len() {
            state.x[bi].add_scaled(&dx[bi], ap);
            state.s[bi].add_scaled(&ds[bi], ad);
            state.x[bi].symmetrize();
            state.s[bi].symmetrize();
        }
    }
    IpmOutcome::IterationLimit
}

pub fn solve_sdp(p: &SdpProblem, settings: &SdpSettings) -> SdpResult {
    let fail = |status: SdpStatus| SdpResult {
        status,
        y: vec![0.0; p.num_vars],
        objective: 0.0,
        dual_ray: None,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        min_eig_margin: f64::NEG_INFINITY,
        iterations: 0,
        phase1_shift: None,
    };
    let core = match build_core(p) {
        Ok(c) => c,
        Err(st) => return fail(st),
    };

    let finish = |status: SdpStatus,
                  z: &[f64],
                  iters: usize,
                  ray: Option<Vec<Mat>>,
                  t: Option<f64>| {
        let y = core.restore_y(z);
        let objective: f64 = p.objective.iter().map(|&(i, v)| v * y[i]).sum();
        let mut margin = f64::INFINITY;
        for b in &p.blocks {
            margin = margin.min(b.eval(&y).min_eig());
        }
        for (row, bnd) in &p.lin_ineq {
            let v: f64 = row.iter().map(|&(i, a)| a * y[i]).sum();
            margin = margin.min(v - bnd);
        }
        let mut eq_res: f64 = 0.0;
        for (row, bnd) in &p.lin_eq {
            let v: f64 = row.iter().map(|&(i, a)| a * y[i]).sum();
            eq_res = eq_res.max((v - bnd).abs());
        }
        SdpResult {
            status,
            y,
            objective,
            dual_ray: ray,
            primal_residual: eq_res,
            dual_residual: 0.0,
            gap: 0.0,
            min_eig_margin: if margin.is_finite() { margin } else { 0.0 },
            iterations: iters,
            phase1_shift: t,
        }
    };

    if core.blocks.is_empty() {
        let z = vec![0.0; core.m];
        let status = if p.objective.is_empty() { SdpStatus::Feasible } else { SdpStatus::Optimal };
        return finish(status, &z, 0, None, None);
    }

    // ---- phase I: min t s.t. F_b(z) + t I >= 0, t >= -1
    let m1 = core.m + 1;
    let t_idx = core.m;
    let mut blocks1: Vec<LmiBlock> = core
        .blocks
        .iter()
        .map(|b| {
            let mut terms = b.terms.clone();
            terms.push((t_idx, Mat::eye(b.dim)));
            LmiBlock { dim: b.dim, konst: b.konst.clone(), terms }
        })
        .collect();
    blocks1.push(LmiBlock {
        dim: 1,
        konst: Mat::eye(1),
        terms: vec![(t_idx, Mat::eye(1))],
    });
    let mut c1 = vec![0.0; m1];
    c1[t_idx] = 1.0;
    let t_start = core
        .blocks
        .iter()
        .map(|b| -b.konst.min_eig())
        .fold(0.0f64, f64::max)
        + 1.0;
    let mut state = IpmState {
        y: {
            let mut y = vec![0.0; m1];
            y[t_idx] = t_start;
            y
        },
        x: blocks1.iter().map(|b| Mat::eye(b.dim)).collect(),
        s: Vec::new(),
    };
    state.s = blocks1.iter().map(|b| b.eval(&state.y)).collect();

    let feasibility_only = p.objective.is_empty();
    let early_thresh = -(100.0 * settings.marginal_tol).max(1e-6);
    let mut iters = 0usize;
    let outcome = ipm(
        &blocks1,
        &c1,
        &mut state,
        settings,
        settings.max_iter,
        Some((t_idx, early_thresh)),
        &mut iters,
    );
    let t_final = state.y[t_idx];
    let z_phase1: Vec<f64> = state.y[..core.m].to_vec();

    match outcome {
        IpmOutcome::NumericFailure => {
            if t_final >= settings.marginal_tol {
                return fail(SdpStatus::NumericFailure);
            }
        }
        IpmOutcome::Unbounded => unreachable!("phase I is bounded below"),
        IpmOutcome::IterationLimit => {
            if t_final > settings.marginal_tol {
                return finish(SdpStatus::IterationLimit, &z_phase1, iters, None, Some(t_final));
            }
        }
        IpmOutcome::Converged | IpmOutcome::EarlyExit => {}
    }

    if t_final > settings.marginal_tol {
        let ray = {
            let tr: f64 = state.x[..core.blocks.len()]
                .iter()
                .map(|x| (0..x.r).map(|i| x[(i, i)]).sum::<f64>())
                .sum();
            (tr > 1e-12).then(|| {
                state.x[..core.blocks.len()]
                    .iter()
                    .map(|x| x.scaled(1.0 / tr))
                    .collect()
            })
        };
        return finish(SdpStatus::Infeasible, &z_phase1, iters, ray, Some(t_final));
    }

    if feasibility_only {
        return finish(SdpStatus::Feasible, &z_phase1, iters, None, Some(t_final));
    }
    if t_final >= -1e-9 {
        // only marginally feasible: no interior to run the objective phase
        return finish(SdpStatus::IterationLimit, &z_phase1, iters, None, Some(t_final));
    }

    // ---- phase II: real objective from the interior point found above
    let mut state2 = IpmState {
        y: z_phase1.clone(),
        x: core.blocks.iter().map(|b| Mat::eye(b.dim)).collect(),
        s: core.blocks.iter().map(|b| b.eval(&z_phase1)).collect(),
    };
    let outcome2 = ipm(
        &core.blocks,
        &core.c,
        &mut state2,
        settings,
        settings.max_iter,
        None,
        &mut iters,
    );
    let z2 = state2.y.clone();
    match outcome2 {
        IpmOutcome::Converged => finish(SdpStatus::Optimal, &z2, iters, None, None),
        IpmOutcome::Unbounded => finish(SdpStatus::Unbounded, &z2, iters, None, None),
        IpmOutcome::IterationLimit => finish(SdpStatus::IterationLimit, &z2, iters, None, None),
        IpmOutcome::NumericFailure => finish(SdpStatus::NumericFailure, &z2, iters, None, None),
        IpmOutcome::EarlyExit => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_by_one(v: f64) -> Mat {
        let mut m = Mat::zeros(1, 1);
        m[(0, 0)] = v;
        m
    }

    #[test]
    fn min_x_st_x_ge_1() {
        // 1x1 LMI x - 1 >= 0, minimize x -> 1
        let p = SdpProblem {
            num_vars: 1,
            objective: vec![(0, 1.0)],
            blocks: vec![LmiBlock {
                dim: 1,
                konst: one_by_one(-1.0),
                terms: vec![(0, one_by_one(1.0))],
            }],
            ..Default::default()
        };
        let r = solve_sdp(&p, &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.y[0] - 1.0).abs() < 1e-5, "y = {}", r.y[0]);
    }

    #[test]
    fn infeasible_pair_has_ray() {
        // x >= 1 and -x >= 0
        let p = SdpProblem {
            num_vars: 1,
            objective: vec![],
            blocks: vec![
                LmiBlock { dim: 1, konst: one_by_one(-1.0), terms: vec![(0, one_by_one(1.0))] },
                LmiBlock { dim: 1, konst: one_by_one(0.0), terms: vec![(0, one_by_one(-1.0))] },
            ],
            ..Default::default()
        };
        let r = solve_sdp(&p, &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Infeasible);
        let ray = r.dual_ray.expect("Farkas ray");
        let a_dot: f64 = ray[0][(0, 0)] - ray[1][(0, 0)];
        let f0_dot: f64 = -ray[0][(0, 0)];
        assert!(a_dot.abs() < 1e-5, "A.X = {a_dot}");
        assert!(f0_dot < -1e-3, "F0.X = {f0_dot}");
    }

    #[test]
    fn lyapunov_style_2x2() {
        // P - I >= 0 and -(A^T P A - P) - 0.1 I >= 0 for A = diag(0.5, 0.8)
        let a = [0.5f64, 0.8];
        let e11 = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let e22 = Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
        let blocks = vec![
            LmiBlock {
                dim: 2,
                konst: Mat::eye(2).scaled(-1.0),
                terms: vec![(0, e11.clone()), (1, e22.clone())],
            },
            LmiBlock {
                dim: 2,
                konst: Mat::eye(2).scaled(-0.1),
                terms: vec![
                    (0, e11.scaled(1.0 - a[0] * a[0])),
                    (1, e22.scaled(1.0 - a[1] * a[1])),
                ],
            },
        ];
        let p = SdpProblem { num_vars: 2, objective: vec![], blocks, ..Default::default() };
        let r = solve_sdp(&p, &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible);
        assert!(r.min_eig_margin > 0.0);
    }

    #[test]
    fn equality_elimination() {
        // min x + y s.t. x = 2, x + y >= 3  -> y = 1, obj 3
        let p = SdpProblem {
            num_vars: 2,
            objective: vec![(0, 1.0), (1, 1.0)],
            blocks: vec![],
            lin_eq: vec![(vec![(0, 1.0)], 2.0)],
            lin_ineq: vec![(vec![(0, 1.0), (1, 1.0)], 3.0)],
        };
        let r = solve_sdp(&p, &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.y[0] - 2.0).abs() < 1e-6);
        assert!((r.y[1] - 1.0).abs() < 1e-4, "y1 = {}", r.y[1]);
    }

    #[test]
    fn sdp_2x2_offdiag() {
        // [[x, 1], [1, x]] >= 0, min x -> x = 1
        let mut k = Mat::zeros(2, 2);
        k[(0, 1)] = 1.0;
        k[(1, 0)] = 1.0;
        let p = SdpProblem {
            num_vars: 1,
            objective: vec![(0, 1.0)],
            blocks: vec![LmiBlock { dim: 2, konst: k, terms: vec![(0, Mat::eye(2))] }],
            ..Default::default()
        };
        let r = solve_sdp(&p, &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.y[0] - 1.0).abs() < 1e-4, "y = {}", r.y[0]);
    }

    #[test]
    fn marginal_pair_is_feasible_without_interior() {
        // x >= 0 and -x >= 0: feasible exactly at the boundary point x = 0;
        // the solver reports it feasible with a ~0 margin and the exact
        // checker downstream owns the verdict
        let p = SdpProblem {
            num_vars: 1,
            objective: vec![],
            blocks: vec![
                LmiBlock { dim: 1, konst: one_by_one(0.0), terms: vec![(0, one_by_one(1.0))] },
                LmiBlock { dim: 1, konst: one_by_one(0.0), terms: vec![(0, one_by_one(-1.0))] },
            ],
            ..Default::default()
        };
        let r = solve_sdp(&p, &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible);
        assert!(r.min_eig_margin.abs() < 1e-6);
    }
}
