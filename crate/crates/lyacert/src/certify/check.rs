//! Solver-free certificate validation: every condition of the rebuilt
//! problem is re-evaluated from scratch — linear rows in exact arithmetic,
//! LMI blocks by exact PSD tests (float mode substitutes eigenvalue margins).

use crate::linalg::Mat;
use crate::model::types::{GraphModel, Milm};
use crate::rat::{rat_to_f64, Rat};
use crate::relax::conic::{ConicProblem, VarKind, VarRef};
use num::{Signed, Zero};

use super::certificate::{rebuild, rebuild_milm, Certificate};

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub ok: bool,
    /// named violations with a witness direction where applicable
    pub violations: Vec<String>,
    /// float-mode minimum eigenvalue across blocks (None in exact mode)
    pub min_margin: Option<f64>,
    pub conditions_checked: usize,
}

impl CheckReport {
    fn push(&mut self, v: String) {
        self.ok = false;
        self.violations.push(v);
    }
}

/// Exact validation of a full value vector against a rebuilt problem.
pub fn check_values_exact(prob: &ConicProblem, values: &[Rat]) -> CheckReport {
    let mut report = CheckReport {
        ok: true,
        violations: Vec::new(),
        min_margin: None,
        conditions_checked: 0,
    };
    if values.len() != prob.num_scalars() {
        report.push(format!(
            "dimension mismatch: certificate carries {} values, the problem has {}",
            values.len(),
            prob.num_scalars()
        ));
        return report;
    }
    // kind sign constraints
    for (vi, (name, kind)) in prob.vars.iter().enumerate() {
        match kind {
            VarKind::NonnegDiag(d) => {
                for i in 0..*d {
                    let v = &values[prob.diag_index(VarRef(vi), i)];
                    if v.is_negative() {
                        report.push(format!("multiplier {name}[{i}] = {v} must be nonnegative"));
                    }
                }
                report.conditions_checked += 1;
            }
            VarKind::NonnegScalar => {
                let v = &values[prob.scalar_index(VarRef(vi))];
                if v.is_negative() {
                    report.push(format!("scalar {name} = {v} must be nonnegative"));
                }
                report.conditions_checked += 1;
            }
            VarKind::SosGram(_) => {
                let g = prob.extract_sym(VarRef(vi), values);
                if !g.is_psd() {
                    report.push(format!("Gram matrix {name} is not positive semidefinite"));
                }
                report.conditions_checked += 1;
            }
            _ => {}
        }
    }
    for (ri, row) in prob.lin_eq.iter().enumerate() {
        let mut lhs = Rat::zero();
        for (i, c) in &row.coeffs {
            lhs += c * &values[*i];
        }
        if lhs != row.rhs {
            report.push(format!(
                "equality row {ri} violated: lhs - rhs = {}",
                crate::rat::fmt_rat(&(lhs - &row.rhs))
            ));
        }
        report.conditions_checked += 1;
    }
    for (ri, row) in prob.lin_ineq.iter().enumerate() {
        let mut lhs = Rat::zero();
        for (i, c) in &row.coeffs {
            lhs += c * &values[*i];
        }
        if lhs < row.rhs {
            report.push(format!(
                "inequality row {ri} violated by {}",
                crate::rat::fmt_rat(&(&row.rhs - &lhs))
            ));
        }
        report.conditions_checked += 1;
    }
    for (bi, block) in prob.lmi.iter().enumerate() {
        let m = prob.eval_block(bi, values);
        if !m.is_psd() {
            // find a witness direction in floats for the report
            let (vals, vecs) = m.to_f64().sym_eigen();
            let dir: Vec<String> = (0..m.r.min(8))
                .map(|i| format!("{:.4}", vecs[(i, 0)]))
                .collect();
            report.push(format!(
                "condition `{}` violated: minimum eigenvalue ~ {:.3e}, witness direction [{}]",
                block.tag,
                vals.first().copied().unwrap_or(f64::NAN),
                dir.join(", ")
            ));
        }
        report.conditions_checked += 1;
    }
    report
}

/// Float-mode validation with eigenvalue margins.
pub fn check_values_float(prob: &ConicProblem, values: &[f64], tol: f64) -> CheckReport {
    let mut report = CheckReport {
        ok: true,
        violations: Vec::new(),
        min_margin: Some(f64::INFINITY),
        conditions_checked: 0,
    };
    let update_margin = |report: &mut CheckReport, m: f64| {
        let cur = report.min_margin.unwrap_or(f64::INFINITY);
        report.min_margin = Some(cur.min(m));
    };
    for (vi, (name, kind)) in prob.vars.iter().enumerate() {
        match kind {
            VarKind::NonnegDiag(d) => {
                for i in 0..*d {
                    let v = values[prob.diag_index(VarRef(vi), i)];
                    if v < -tol {
                        report.push(format!("multiplier {name}[{i}] = {v:.3e} negative"));
                    }
                    update_margin(&mut report, v);
                }
            }
            VarKind::NonnegScalar => {
                let v = values[prob.scalar_index(VarRef(vi))];
                if v < -tol {
                    report.push(format!("scalar {name} = {v:.3e} negative"));
                }
                update_margin(&mut report, v);
            }
            VarKind::SosGram(d) => {
                let mut g = Mat::zeros(*d, *d);
                for a in 0..*d {
                    for b in a..*d {
                        let v = values[prob.sym_index(VarRef(vi), a, b)];
                        g[(a, b)] = v;
                        g[(b, a)] = v;
                    }
                }
                let e = g.min_eig();
                if e < -tol {
                    report.push(format!("Gram {name} eigenvalue {e:.3e}"));
                }
                update_margin(&mut report, e);
            }
            _ => {}
        }
        report.conditions_checked += 1;
    }
    for row in prob.lin_eq.iter() {
        let lhs: f64 = row.coeffs.iter().map(|(i, c)| rat_to_f64(c) * values[*i]).sum();
        let r = (lhs - rat_to_f64(&row.rhs)).abs();
        if r > tol {
            report.push(format!("equality residual {r:.3e}"));
        }
        report.conditions_checked += 1;
    }
    for row in prob.lin_ineq.iter() {
        let lhs: f64 = row.coeffs.iter().map(|(i, c)| rat_to_f64(c) * values[*i]).sum();
        let slack = lhs - rat_to_f64(&row.rhs);
        if slack < -tol {
            report.push(format!("inequality violated by {:.3e}", -slack));
        }
        update_margin(&mut report, slack);
        report.conditions_checked += 1;
    }
    for (bi, block) in prob.lmi.iter().enumerate() {
        let mut m = block.konst.to_f64();
        for (i, c) in &block.terms {
            m.add_scaled(&c.to_f64(), values[*i]);
        }
        let e = m.min_eig();
        if e < -tol {
            report.push(format!("condition `{}` eigenvalue {e:.3e}", block.tag));
        }
        update_margin(&mut report, e);
        let _ = bi;
        report.conditions_checked += 1;
    }
    report
}

/// Re-validates a certificate against a graph model. `exact` selects the
/// rational path; float mode uses the given tolerance on eigenvalue margins.
pub fn check_certificate(
    model: &GraphModel,
    cert: &Certificate,
    exact: bool,
    tol: f64,
) -> Result<CheckReport, String> {
    let prob = rebuild(model, &cert.assembly)?;
    let values = cert.values_exact()?;
    if exact {
        Ok(check_values_exact(&prob, &values))
    } else {
        let fv: Vec<f64> = values.iter().map(rat_to_f64).collect();
        Ok(check_values_float(&prob, &fv, tol))
    }
}

/// MILM-model variant.
pub fn check_certificate_milm(
    milm: &Milm,
    cert: &Certificate,
    exact: bool,
    tol: f64,
) -> Result<CheckReport, String> {
    let prob = rebuild_milm(milm, &cert.assembly)?;
    let values = cert.values_exact()?;
    if exact {
        Ok(check_values_exact(&prob, &values))
    } else {
        let fv: Vec<f64> = values.iter().map(rat_to_f64).collect();
        Ok(check_values_float(&prob, &fv, tol))
    }
}

/// Solves a conic problem's SDP lowering and rounds the solution into an
/// exactly-feasible value vector, escalating the denominator cap on failure.
/// This is certificate *construction*; checking stays solver-free.
pub fn solve_and_round(
    prob: &ConicProblem,
    settings: &crate::solver::sdp::SdpSettings,
) -> Result<(Vec<Rat>, crate::solver::sdp::SdpResult), String> {
    use crate::solver::sdp::{solve_sdp, SdpStatus};
    let sdp = prob.lower_sdp();
    let res = solve_sdp(&sdp, settings);
    match res.status {
        SdpStatus::Feasible | SdpStatus::Optimal => {}
        other => return Err(format!("solver status {other:?}")),
    }
    for max_den in [1_000_000u64, 100_000_000, 10_000_000_000, 1_000_000_000_000] {
        let vals = super::certificate::round_solution(prob, &res.y, max_den)?;
        let report = check_values_exact(prob, &vals);
        if report.ok {
            return Ok((vals, res));
        }
    }
    Err("rounded solution failed the exact re-check at every denominator cap".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use crate::rlinalg::RMat;

    #[test]
    fn exact_check_names_violated_block() {
        let mut prob = ConicProblem::new();
        let p = prob.add_var("P", VarKind::SymMat(2));
        let blk = prob.new_block(2, "toy condition");
        prob.block_add_congruence(blk, p, &RMat::eye(2), &rat(1));
        // P = diag(1, -1): not PSD
        let mut vals = vec![Rat::zero(); prob.num_scalars()];
        vals[prob.sym_index(p, 0, 0)] = rat(1);
        vals[prob.sym_index(p, 1, 1)] = rat(-1);
        let report = check_values_exact(&prob, &vals);
        assert!(!report.ok);
        assert!(report.violations[0].contains("toy condition"), "{:?}", report.violations);
        // flip: PSD passes
        vals[prob.sym_index(p, 1, 1)] = ratio(1, 2);
        assert!(check_values_exact(&prob, &vals).ok);
    }

    #[test]
    fn solve_and_round_produces_exact_certificate() {
        // P - I >= 0 (interior exists): rounded solution must pass exactly
        let mut prob = ConicProblem::new();
        let p = prob.add_var("P", VarKind::SymMat(2));
        let blk = prob.new_block(2, "P-I");
        prob.block_add_congruence(blk, p, &RMat::eye(2), &rat(1));
        prob.block_add_const(blk, &RMat::eye(2).scaled(&rat(-1)));
        let (vals, _) = solve_and_round(&prob, &Default::default()).unwrap();
        assert!(check_values_exact(&prob, &vals).ok);
    }
}
