//! Turning validated invariants into verdicts: separating-manifold checks
//! (sup over the initial set strictly below inf over the unsafe pre-images),
//! unsafe-set builders for the standard runtime-error specifications, and
//! conservative sup/inf bounding by the toolkit's own relaxations.

use crate::model::semialg::{AffExpr, SemialgebraicSet};
use crate::model::types::{GraphModel, NodeId};
use crate::rat::{rat, Rat};
use crate::relax::conic::{ConicProblem, VarKind};
use crate::relax::sos::{Poly, SetPolys, SosOpts};
use crate::solver::sdp::{solve_sdp, SdpSettings, SdpStatus};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    Overflow,
    Assert,
    DivByZero,
    EvenRoot,
    Log,
    DeadCode,
    Unreachability,
    Termination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    Certified,
    NotCertified,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub property: Property,
    pub status: VerdictStatus,
    pub t_u: Option<f64>,
    /// which clause of the separation argument fired, plus binding numbers
    pub trace: Vec<String>,
}

/// Table-style unsafe-set construction for the standard specifications. The
/// `gap` closes strict inequalities (1 for integer-typed models, a small
/// separation constant over the reals).
pub fn unsafe_set_for(
    kind: Property,
    n: usize,
    operand: &AffExpr,
    gap: &Rat,
) -> Vec<SemialgebraicSet> {
    let mk = |exprs: Vec<AffExpr>| {
        exprs
            .into_iter()
            .map(|e| {
                let mut s = SemialgebraicSet::universal(n);
                s.lin_ineq.push(e);
                s
            })
            .collect::<Vec<_>>()
    };
    match kind {
        Property::DivByZero => {
            // x_o = 0
            let mut s = SemialgebraicSet::universal(n);
            s.lin_eq.push(operand.clone());
            vec![s]
        }
        Property::EvenRoot => {
            // x_o < 0, closed as -x_o >= gap
            let mut e = operand.neg();
            e.constant = &e.constant - gap;
            mk(vec![e])
        }
        Property::Log => {
            // x_o <= 0
            mk(vec![operand.neg()])
        }
        Property::DeadCode => vec![SemialgebraicSet::universal(n)],
        Property::Overflow | Property::Assert | Property::Unreachability => {
            // callers supply these directly
            Vec::new()
        }
        Property::Termination => Vec::new(),
    }
}

/// per-variable |x_l| > limit as two closed disjuncts (gap-shifted)
pub fn overflow_disjuncts(n: usize, var: usize, limit: &Rat, gap: &Rat) -> Vec<SemialgebraicSet> {
    let mut hi = AffExpr::var(n, var);
    hi.constant = -(limit + gap);
    let mut lo = AffExpr::var(n, var).neg();
    lo.constant = -(limit + gap);
    [hi, lo]
        .into_iter()
        .map(|e| {
            let mut s = SemialgebraicSet::universal(n);
            s.lin_ineq.push(e);
            s
        })
        .collect()
}

/// Conservative upper bound on sup of `target` over a constraint set
/// (minimize t with t - target nonnegative on the set, SOS-relaxed). The
/// direction is sound for separation: the returned value dominates the sup.
pub fn sup_bound(
    nvars: usize,
    target: &Poly,
    set: &SetPolys,
    settings: &SdpSettings,
) -> Option<f64> {
    let mut prob = ConicProblem::new();
    let t = prob.add_var("level", VarKind::Scalar);
    let t_idx = prob.scalar_index(t);
    prob.objective = vec![(t_idx, Rat::from_integer(1.into()))];
    let deg = target.degree().max(2);
    let opts = SosOpts::default();
    let one = Poly::constant(nvars, Rat::from_integer(1.into()));
    crate::relax::sos::push_sos_condition(&mut prob, nvars, deg, set, &opts, "sup", |m, p| {
        m.add_scaled_scalar(p.scalar_index(t), &one, &rat(1));
        m.add_known(target, &rat(-1));
    })
    .ok()?;
    let res = solve_sdp(&prob.lower_sdp(), settings);
    match res.status {
        SdpStatus::Optimal => Some(res.objective),
        _ => None,
    }
}

/// Conservative lower bound on inf of `target` over a constraint set.
pub fn inf_bound(
    nvars: usize,
    target: &Poly,
    set: &SetPolys,
    settings: &SdpSettings,
) -> Option<f64> {
    let neg = target.scaled(&rat(-1));
    sup_bound(nvars, &neg, set, settings).map(|v| -v)
}

/// The separating-manifold conclusion. `sup_init` bounds V over the initial
/// set from above, `inf_unsafe` bounds V over the unsafe pre-image from
/// below, and `thetas` are the decay rates in play. `eps_sep` enforces the
/// strict separation in float mode.
pub fn conclude_unreachability(
    property: Property,
    sup_init: f64,
    inf_unsafe: f64,
    thetas: &[Rat],
    eps_sep: f64,
) -> Verdict {
    let mut trace = vec![format!(
        "sup over initial set = {sup_init:.6}, inf over unsafe pre-image = {inf_unsafe:.6}"
    )];
    let separated = sup_init + eps_sep <= inf_unsafe;
    if !separated {
        trace.push("separation failed: sup over the initial set must sit strictly below".into());
        return Verdict { property, status: VerdictStatus::NotCertified, t_u: None, trace };
    }
    let one = Rat::from_integer(1.into());
    let all_one = thetas.iter().all(|t| *t == one);
    let all_le_one = thetas.iter().all(|t| *t <= one);
    let all_ge_one = thetas.iter().all(|t| *t >= one);
    if all_one {
        trace.push("rates are all 1: level sets of the invariant are forward-invariant".into());
        return Verdict { property, status: VerdictStatus::Certified, t_u: None, trace };
    }
    if all_le_one && inf_unsafe > 0.0 {
        trace.push(format!(
            "rates <= 1 and inf over the unsafe pre-image = {inf_unsafe:.6} > 0"
        ));
        return Verdict { property, status: VerdictStatus::Certified, t_u: None, trace };
    }
    if all_ge_one && sup_init <= 0.0 {
        trace.push(format!(
            "rates >= 1 and sup over the initial set = {sup_init:.6} <= 0"
        ));
        return Verdict { property, status: VerdictStatus::Certified, t_u: None, trace };
    }
    trace.push(
        "no separation clause applies (mixed rates with inconclusive signs)".into(),
    );
    Verdict { property, status: VerdictStatus::NotCertified, t_u: None, trace }
}

/// set description of node's invariant (for sup/inf subproblems)
pub fn node_set(model: &GraphModel, node: NodeId) -> SetPolys {
    SetPolys::from_set(&model.invariants[node])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    #[test]
    fn sup_inf_bounds_on_interval() {
        // sup of x over {x in [1, 3]} = 3; inf = 1
        let mut set = SetPolys { ineqs: vec![], eqs: vec![] };
        let mut up = Poly::constant(1, rat(3));
        up.add_term(vec![1], rat(-1));
        let mut dn = Poly::constant(1, rat(-1));
        dn.add_term(vec![1], rat(1));
        set.ineqs.push(up);
        set.ineqs.push(dn);
        let x = Poly::var(1, 0);
        let s = sup_bound(1, &x, &set, &Default::default()).unwrap();
        assert!((s - 3.0).abs() < 1e-4, "sup = {s}");
        let i = inf_bound(1, &x, &set, &Default::default()).unwrap();
        assert!((i - 1.0).abs() < 1e-4, "inf = {i}");
    }

    #[test]
    fn separation_clauses() {
        // theta < 1 with inf = 0: clause I fails
        let v = conclude_unreachability(
            Property::Unreachability,
            -1.0,
            0.0,
            &[ratio(1, 2)],
            1e-6,
        );
        assert_eq!(v.status, VerdictStatus::NotCertified);
        // theta > 1 with sup = 0: clause II passes
        let v = conclude_unreachability(
            Property::Unreachability,
            0.0,
            1.0,
            &[ratio(3, 2)],
            1e-6,
        );
        assert_eq!(v.status, VerdictStatus::Certified);
        // all rates 1
        let v = conclude_unreachability(Property::DivByZero, -2.0, 1.0, &[rat(1)], 1e-6);
        assert_eq!(v.status, VerdictStatus::Certified);
    }

    #[test]
    fn unsafe_builders() {
        let op = AffExpr::var(2, 1); // x_o = second variable
        let dz = unsafe_set_for(Property::DivByZero, 2, &op, &rat(1));
        assert_eq!(dz.len(), 1);
        assert_eq!(dz[0].lin_eq.len(), 1);
        let root = unsafe_set_for(Property::EvenRoot, 2, &op, &rat(1));
        // -x_o - 1 >= 0
        assert_eq!(root[0].lin_ineq[0].constant, rat(-1));
        let ovf = overflow_disjuncts(2, 0, &rat(100), &rat(1));
        assert_eq!(ovf.len(), 2);
        assert!(ovf[0].contains(&[rat(101), rat(0)]));
        assert!(!ovf[0].contains(&[rat(100), rat(0)]));
        assert!(ovf[1].contains(&[rat(-101), rat(0)]));
    }
}
