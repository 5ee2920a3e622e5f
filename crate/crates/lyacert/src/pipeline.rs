//! End-to-end drivers: overflow-level bisection over the graph LMI
//! assembly, certificate construction (solve, round, exact re-check), and
//! verdict assembly.

use crate::certify::certificate::{round_solution, Assembly, Certificate, PolyData, Provenance};
use crate::certify::check::{check_values_exact, solve_and_round};
use crate::certify::ftt::cycle_bounds;
use crate::model::types::GraphModel;
use crate::rat::{fmt_rat, rat_to_f64, rationalize, Rat};
use crate::relax::conic::ConicProblem;
use crate::relax::graph_lmi::{assemble_graph_quadratic, GraphLmiOpts, GraphMethod};
use crate::relax::rates::RatePlan;
use crate::relax::sos::Poly;
use crate::solver::sdp::{solve_sdp, SdpSettings, SdpStatus};
use num::{One, Zero};

#[derive(Clone, Debug)]
pub struct BisectOpts {
    pub lo: f64,
    pub hi: f64,
    /// relative width at which the bisection stops
    pub rel_tol: f64,
    pub settings: SdpSettings,
}

impl Default for BisectOpts {
    fn default() -> Self {
        BisectOpts { lo: 1.0, hi: 1e9, rel_tol: 5e-4, settings: SdpSettings::default() }
    }
}

#[derive(Clone, Debug)]
pub struct LevelResult {
    /// smallest certified level (physical units)
    pub level: f64,
    pub certificate: Certificate,
    pub solver_iterations: usize,
}

/// Minimizes the overflow level by bisection: `build` maps a candidate level
/// to (model, rates, alpha) — the model may depend on the level through
/// float-error radii. The final certificate is rounded and re-checked
/// exactly; if the boundary level fails the exact check the level is nudged
/// upward geometrically until it passes.
pub fn certify_min_level(
    mut build: impl FnMut(f64) -> Result<(GraphModel, RatePlan, Vec<Rat>), String>,
    opts: &GraphLmiOpts,
    bisect: &BisectOpts,
) -> Result<LevelResult, String> {
    let mut iterations = 0usize;
    let mut feasible_at = |level: f64| -> Result<Option<(GraphModel, RatePlan, Vec<Rat>, ConicProblem, Vec<f64>)>, String> {
        let (model, rates, alpha) = build(level)?;
        let (prob, _) = assemble_graph_quadratic(&model, &rates, &alpha, opts)?;
        let res = solve_sdp(&prob.lower_sdp(), &bisect.settings);
        iterations += res.iterations;
        Ok(match res.status {
            SdpStatus::Feasible | SdpStatus::Optimal => {
                Some((model, rates, alpha, prob, res.y))
            }
            _ => None,
        })
    };

    let mut hi = bisect.hi;
    let mut lo = bisect.lo;
    if feasible_at(hi)?.is_none() {
        return Err(format!("not certifiable up to level {hi}"));
    }
    // expand the lower edge if it is accidentally feasible
    if feasible_at(lo)?.is_some() {
        hi = lo;
        lo = 0.0;
    }
    while (hi - lo) > bisect.rel_tol * hi.max(1.0) {
        let mid = if lo == 0.0 { hi / 2.0 } else { 0.5 * (lo + hi) };
        if feasible_at(mid)?.is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // final solve at the certified edge, rounded and exactly re-checked;
    // nudge upward if the rounded point sits outside
    let mut level = hi;
    for _ in 0..20 {
        if let Some((model, rates, alpha, prob, y)) = feasible_at(level)? {
            let mut checked = None;
            for cap in [1_000_000u64, 1_000_000_000, 1_000_000_000_000] {
                let vals = round_solution(&prob, &y, cap)?;
                let report = check_values_exact(&prob, &vals);
                if report.ok {
                    checked = Some(vals);
                    break;
                }
            }
            if let Some(vals) = checked {
                let cert = package_graph_certificate(
                    &model, &rates, &alpha, opts, &prob, &vals, level, iterations,
                );
                return Ok(LevelResult { level, certificate: cert, solver_iterations: iterations });
            }
        }
        level *= 1.0 + 10.0 * bisect.rel_tol;
    }
    Err("exact re-check failed at every nudged level".into())
}

/// Feasibility at a fixed level (no bisection), returning the checked
/// certificate.
pub fn certify_at_level(
    model: &GraphModel,
    rates: &RatePlan,
    alpha: &[Rat],
    opts: &GraphLmiOpts,
    settings: &SdpSettings,
) -> Result<(Certificate, ConicProblem), String> {
    let (prob, _) = assemble_graph_quadratic(model, rates, alpha, opts)?;
    let (vals, res) = solve_and_round(&prob, settings)?;
    let level = alpha.iter().map(rat_to_f64).fold(0.0f64, f64::max);
    Ok((
        package_graph_certificate(model, rates, alpha, opts, &prob, &vals, level, res.iterations),
        prob,
    ))
}

#[allow(clippy::too_many_arguments)]
fn package_graph_certificate(
    model: &GraphModel,
    rates: &RatePlan,
    alpha: &[Rat],
    opts: &GraphLmiOpts,
    prob: &ConicProblem,
    values: &[Rat],
    level: f64,
    iterations: usize,
) -> Certificate {
    // extract sigma per node for display
    let mut sigma = Vec::new();
    for (vi, (name, kind)) in prob.vars.iter().enumerate() {
        if let crate::relax::conic::VarKind::SymMat(_) = kind {
            if let Some(node) = name.strip_prefix("P[").and_then(|s| s.strip_suffix("]")) {
                let pmat = prob.extract_sym(crate::relax::conic::VarRef(vi), values);
                sigma.push((node.to_string(), quad_poly_data(model.n(), &pmat)));
            }
        }
    }
    let (method, coordinate) = match &opts.method {
        GraphMethod::Joint => ("joint".to_string(), None),
        GraphMethod::Simplified => ("simplified".to_string(), None),
        GraphMethod::PerCoordinate(c) => ("per-coordinate".to_string(), Some(*c)),
    };
    Certificate {
        version: 1,
        model: model.summary(),
        assembly: Assembly::GraphQuadratic {
            rates: rates.clone(),
            alpha: alpha.iter().map(fmt_rat).collect(),
            method,
            coordinate,
            z: fmt_rat(&opts.z),
            products: opts.products,
            shared_multipliers: opts.shared_multipliers,
        },
        values: values.iter().map(fmt_rat).collect(),
        sigma,
        certified_bound: Some(format!("{level}")),
        t_u: None,
        z_normalization: fmt_rat(&opts.z),
        provenance: Provenance {
            run_id: String::new(),
            solver: "interior-point (NT scaling)".into(),
            tolerances: "feas 1e-8, gap 1e-8, marginal 1e-7".into(),
            iterations,
        },
    }
}

fn quad_poly_data(n: usize, p: &crate::rlinalg::RMat) -> PolyData {
    let mut poly = Poly::zero(n);
    for a in 0..=n {
        for b in 0..=n {
            if p[(a, b)].is_zero() {
                continue;
            }
            let mut mono = vec![0u32; n];
            if a < n {
                mono[a] += 1;
            }
            if b < n {
                mono[b] += 1;
            }
            poly.add_term(mono, p[(a, b)].clone());
        }
    }
    PolyData::from_poly(&poly)
}

/// Termination report from a certificate's rates: per-cycle data with the
/// z normalization as the sup bound.
pub fn termination_from_rates(
    model: &GraphModel,
    rates: &RatePlan,
    z: &Rat,
) -> (Vec<crate::certify::ftt::CycleReport>, Option<f64>) {
    let zf = rat_to_f64(z);
    cycle_bounds(model, rates, |_| Some(zf))
}

/// Uniform rates with the start-edge convention, parsed from floats.
pub fn uniform_rates(model: &GraphModel, theta: f64, mu: f64) -> RatePlan {
    RatePlan::uniform(model, rationalize(theta, 1_000_000), rationalize(mu, 1_000_000))
}

/// Level-to-alpha helper: the same physical bound on every coordinate.
pub fn uniform_alpha(n: usize, level: f64) -> Vec<Rat> {
    vec![rationalize(level, 1_000_000); n]
}

/// Convenience: is the initial set inside the alpha box (exact LP check on
/// the linear part)?
pub fn init_inside_box(model: &GraphModel, alpha: &[Rat]) -> bool {
    use crate::solver::lp::{solve, Cmp, LinProg, LpStatus};
    let init = model.init_set();
    let n = model.n();
    for (i, a) in alpha.iter().enumerate() {
        for sign in [Rat::one(), -Rat::one()] {
            let mut p: LinProg<Rat> = LinProg::new(n);
            let mut obj = vec![Rat::zero(); n];
            obj[i] = -sign.clone();
            p.minimize = obj;
            for e in &init.lin_ineq {
                p.constrain(e.coeffs.clone(), Cmp::Ge, -e.constant.clone());
            }
            for e in &init.lin_eq {
                p.constrain(e.coeffs.clone(), Cmp::Eq, -e.constant.clone());
            }
            let r = solve(&p);
            match r.status {
                LpStatus::Optimal => {
                    if -r.objective > *a {
                        return false;
                    }
                }
                LpStatus::Unbounded => return false,
                LpStatus::Infeasible => return true, // empty init: vacuous
            }
        }
    }
    true
}
