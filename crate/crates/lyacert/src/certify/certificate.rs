//! Certificates: a self-describing assembly descriptor plus the full rounded
//! solution vector. Checking rebuilds the exact feasibility problem from the
//! descriptor and re-validates every condition in rational arithmetic,
//! without ever calling a solver.

use crate::model::types::GraphModel;
use crate::rat::{fmt_rat, parse_rat, rationalize, Rat};
use crate::relax::conic::ConicProblem;
use crate::relax::graph_lmi::{assemble_graph_quadratic, GraphLmiOpts, GraphMethod};
use crate::relax::milm_lmi::{
    assemble_milm_linear, assemble_milm_overflow, assemble_milm_quadratic, AssembleOpts,
    LinearMode,
};
use crate::relax::rates::RatePlan;
use crate::relax::sos::{
    assemble_graph_sos, monomials, push_sos_condition, Poly, SetPolys, SosOpts,
};
use crate::rlinalg::RMat;
use num::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A polynomial in the model variables, serialized as monomial/coefficient
/// pairs (coefficients `p/q`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyData {
    pub monomials: Vec<Vec<u32>>,
    pub coeffs: Vec<String>,
}

impl PolyData {
    pub fn from_poly(p: &Poly) -> Self {
        let mut monomials = Vec::new();
        let mut coeffs = Vec::new();
        for (m, c) in &p.terms {
            monomials.push(m.clone());
            coeffs.push(fmt_rat(c));
        }
        PolyData { monomials, coeffs }
    }

    pub fn to_poly(&self, nvars: usize) -> Result<Poly, String> {
        let mut p = Poly::zero(nvars);
        for (m, c) in self.monomials.iter().zip(&self.coeffs) {
            if m.len() != nvars {
                return Err("monomial arity mismatch".into());
            }
            p.add_term(m.clone(), parse_rat(c).map_err(|e| e.to_string())?);
        }
        Ok(p)
    }
}

/// A generic "target polynomial is nonnegative on a node set" condition,
/// relaxed by SOS multipliers; used for unsafe-set separation, sup-level
/// bounds and any bespoke side condition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SosNonnegCond {
    /// target polynomial over the model variables
    pub target: PolyData,
    /// node whose invariant set constrains the condition
    pub node: String,
    /// additional unsafe-set disjunct of that node to intersect (by index)
    pub unsafe_disjunct: Option<usize>,
    /// additional box |x_i| <= limits to intersect (empty = none)
    pub box_limits: Vec<String>,
    /// extra polynomial inequality constraints (>= 0)
    pub extra_ineqs: Vec<PolyData>,
    pub gram_degree: u32,
}

/// How to rebuild the feasibility problem this certificate solves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Assembly {
    GraphQuadratic {
        rates: RatePlan,
        alpha: Vec<String>,
        method: String,
        coordinate: Option<usize>,
        z: String,
        products: bool,
        shared_multipliers: bool,
    },
    GraphSos {
        rates: RatePlan,
        degrees: Vec<u32>,
        eq_multiplier_degree: u32,
        pair_products: bool,
    },
    /// node-wise invariance with *fixed* invariants (sigma given, only
    /// multipliers are decision data) plus bespoke side conditions
    FixedSigmaSuite {
        rates: RatePlan,
        sigma: Vec<Option<PolyData>>,
        side_conditions: Vec<SosNonnegCond>,
        eq_multiplier_degree: u32,
        pair_products: bool,
    },
    MilmQuadratic {
        theta: String,
        mu: String,
    },
    MilmOverflow {
        theta: String,
        mu: String,
        alpha: Vec<String>,
        z: String,
    },
    MilmLinear {
        theta: String,
        mu: String,
        mode: String,
        fixed_k: Option<Vec<String>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub run_id: String,
    pub solver: String,
    pub tolerances: String,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    /// summary of the model this certificate belongs to
    pub model: String,
    pub assembly: Assembly,
    /// full solution vector, rationals `p/q`, aligned with the rebuilt
    /// problem's scalar layout
    pub values: Vec<String>,
    /// extracted invariants per node for display
    pub sigma: Vec<(String, PolyData)>,
    /// certified overflow level in physical units, when applicable
    pub certified_bound: Option<String>,
    /// finite-time termination bound, when certified
    pub t_u: Option<String>,
    /// normalization constant bounding sup |sigma| for the bound formula
    pub z_normalization: String,
    pub provenance: Provenance,
}

impl Certificate {
    pub fn values_exact(&self) -> Result<Vec<Rat>, String> {
        self.values
            .iter()
            .map(|s| parse_rat(s).map_err(|e| e.to_string()))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

/// Rebuilds the exact feasibility problem described by the certificate's
/// assembly descriptor against the model.
pub fn rebuild(model: &GraphModel, assembly: &Assembly) -> Result<ConicProblem, String> {
    match assembly {
        Assembly::GraphQuadratic {
            rates,
            alpha,
            method,
            coordinate,
            z,
            products,
            shared_multipliers,
        } => {
            let alpha: Result<Vec<Rat>, _> = alpha.iter().map(|s| parse_rat(s)).collect();
            let opts = GraphLmiOpts {
                method: match (method.as_str(), coordinate) {
                    ("joint", _) => GraphMethod::Joint,
                    ("simplified", _) => GraphMethod::Simplified,
                    ("per-coordinate", Some(c)) => GraphMethod::PerCoordinate(*c),
                    other => return Err(format!("unknown method {other:?}")),
                },
                z: parse_rat(z).map_err(|e| e.to_string())?,
                shared_multipliers: *shared_multipliers,
                products: *products,
                eps: Rat::zero(),
            };
            let (prob, _) = assemble_graph_quadratic(
                model,
                rates,
                &alpha.map_err(|e| e.to_string())?,
                &opts,
            )?;
            Ok(prob)
        }
        Assembly::GraphSos { rates, degrees, eq_multiplier_degree, pair_products } => {
            let opts = SosOpts {
                eq_multiplier_degree: *eq_multiplier_degree,
                pair_products: *pair_products,
                eps: Rat::zero(),
            };
            let (prob, _) = assemble_graph_sos(model, rates, degrees, &opts)?;
            Ok(prob)
        }
        Assembly::FixedSigmaSuite {
            rates,
            sigma,
            side_conditions,
            eq_multiplier_degree,
            pair_products,
        } => rebuild_fixed_suite(
            model,
            rates,
            sigma,
            side_conditions,
            *eq_multiplier_degree,
            *pair_products,
        ),
        Assembly::MilmQuadratic { theta, mu } => {
            let block = single_milm_block(model)?;
            let (prob, _) = assemble_milm_quadratic(
                &block,
                &parse_rat(theta).map_err(|e| e.to_string())?,
                &parse_rat(mu).map_err(|e| e.to_string())?,
                &AssembleOpts::default(),
            );
            Ok(prob)
        }
        Assembly::MilmOverflow { .. } | Assembly::MilmLinear { .. } => Err(
            "stand-alone MILM certificates are rebuilt through their own model file".into(),
        ),
    }
}

/// MILM-flavored assemblies applied to stand-alone MILM models.
pub fn rebuild_milm(
    milm: &crate::model::types::Milm,
    assembly: &Assembly,
) -> Result<ConicProblem, String> {
    match assembly {
        Assembly::MilmQuadratic { theta, mu } => {
            let (prob, _) = assemble_milm_quadratic(
                &milm.block,
                &parse_rat(theta).map_err(|e| e.to_string())?,
                &parse_rat(mu).map_err(|e| e.to_string())?,
                &AssembleOpts::default(),
            );
            Ok(prob)
        }
        Assembly::MilmOverflow { theta, mu, alpha, z } => {
            let alpha: Result<Vec<Rat>, _> = alpha.iter().map(|s| parse_rat(s)).collect();
            let (prob, _) = assemble_milm_overflow(
                &milm.block,
                &milm.init,
                &parse_rat(theta).map_err(|e| e.to_string())?,
                &parse_rat(mu).map_err(|e| e.to_string())?,
                &alpha.map_err(|e| e.to_string())?,
                &parse_rat(z).map_err(|e| e.to_string())?,
                &AssembleOpts::default(),
            );
            Ok(prob)
        }
        Assembly::MilmLinear { theta, mu, mode, fixed_k } => {
            let mode = match mode.as_str() {
                "sdp" => LinearMode::Sdp,
                "lp" => LinearMode::LpRelax,
                "lp-vertex" => LinearMode::LpVertex,
                other => return Err(format!("unknown linear mode `{other}`")),
            };
            let kvec: Option<Vec<Rat>> = match fixed_k {
                Some(ks) => Some(
                    ks.iter()
                        .map(|s| parse_rat(s).map_err(|e| e.to_string()))
                        .collect::<Result<_, _>>()?,
                ),
                None => None,
            };
            let (prob, _) = assemble_milm_linear(
                &milm.block,
                &parse_rat(theta).map_err(|e| e.to_string())?,
                &parse_rat(mu).map_err(|e| e.to_string())?,
                mode,
                kvec.as_deref(),
                &AssembleOpts::default(),
            )?;
            Ok(prob)
        }
        _ => Err("graph assemblies need a graph model".into()),
    }
}

fn single_milm_block(model: &GraphModel) -> Result<crate::model::types::MilmBlock, String> {
    for e in &model.edges {
        if let crate::model::types::EdgeLabel::Milm(b) = &e.label {
            return Ok(b.clone());
        }
    }
    Err("model carries no MILM block".into())
}

/// Invariance conditions with fixed sigma: one SOS membership per edge (the
/// multipliers are the only decisions), plus the listed side conditions.
pub fn rebuild_fixed_suite(
    model: &GraphModel,
    rates: &RatePlan,
    sigma: &[Option<PolyData>],
    side: &[SosNonnegCond],
    eq_multiplier_degree: u32,
    pair_products: bool,
) -> Result<ConicProblem, String> {
    let n = model.n();
    let sigmas: Vec<Option<Poly>> = sigma
        .iter()
        .map(|s| s.as_ref().map(|p| p.to_poly(n)).transpose())
        .collect::<Result<_, _>>()?;
    let mut prob = ConicProblem::new();
    let opts = SosOpts { eq_multiplier_degree, pair_products, eps: Rat::zero() };
    for (ei, edge) in model.edges.iter().enumerate() {
        {
            let mut gate = edge.passport.clone();
            gate.conjoin(&model.invariants[edge.from]);
            if !gate.lin_feasible() {
                continue;
            }
        }
        let crate::model::types::EdgeLabel::Affine(t) = &edge.label else {
            return Err("fixed-sigma suites need affine edges".into());
        };
        if t.n_v() > 0 {
            return Err("fixed-sigma suites need selector-free labels".into());
        }
        let (theta, mu) = rates
            .get(edge.from, edge.to, edge.k)
            .cloned()
            .ok_or_else(|| format!("no rates for edge {ei}"))?;
        let q = t.n_w();
        let nv = n + q;
        let sig_to = match &sigmas[edge.to] {
            Some(s) => s.clone(),
            None => Poly::zero(n),
        };
        let sig_from = match &sigmas[edge.from] {
            Some(s) => s.clone(),
            None => Poly::zero(n),
        };
        // -sigma_to(T(x,w)) + theta sigma_from(x) - mu on the edge set
        let subs: Vec<Poly> = (0..n)
            .map(|row| {
                let mut p = Poly::constant(nv, t.e[row].clone());
                for j in 0..n {
                    if !t.a[(row, j)].is_zero() {
                        let mut m = vec![0; nv];
                        m[j] = 1;
                        p.add_term(m, t.a[(row, j)].clone());
                    }
                }
                for j in 0..q {
                    if !t.b[(row, j)].is_zero() {
                        let mut m = vec![0; nv];
                        m[n + j] = 1;
                        p.add_term(m, t.b[(row, j)].clone());
                    }
                }
                p
            })
            .collect();
        let pads: Vec<Poly> = (0..n).map(|i| Poly::var(nv, i)).collect();
        let target = sig_to
            .compose(&subs)
            .scaled(&crate::rat::rat(-1))
            .add(&sig_from.compose(&pads).scaled(&theta))
            .add(&Poly::constant(nv, -mu.clone()));
        let mut set = {
            let mut s = model.invariants[edge.from].clone();
            s.conjoin(&edge.passport);
            let mut polys = SetPolys::from_set(&s);
            for p in polys.ineqs.iter_mut().chain(polys.eqs.iter_mut()) {
                *p = pad_poly(p, nv);
            }
            if !t.constraint.is_universal() {
                let extra = SetPolys::from_set(&t.constraint);
                polys.ineqs.extend(extra.ineqs);
                polys.eqs.extend(extra.eqs);
            }
            polys
        };
        set.push_box(nv, n..nv);
        let deg = target.degree().max(2);
        let tag = format!(
            "{}->{}k{}",
            model.node_names[edge.from], model.node_names[edge.to], edge.k
        );
        push_sos_condition(&mut prob, nv, deg, &set, &opts, &tag, |m, _| {
            m.add_known(&target, &crate::rat::rat(1));
        })?;
    }
    for (ci, cond) in side.iter().enumerate() {
        push_side_condition(&mut prob, model, cond, &opts, &format!("side{ci}"))?;
    }
    Ok(prob)
}

pub fn push_side_condition(
    prob: &mut ConicProblem,
    model: &GraphModel,
    cond: &SosNonnegCond,
    opts: &SosOpts,
    tag: &str,
) -> Result<(), String> {
    let n = model.n();
    let node = model.node(&cond.node).map_err(|e| e.to_string())?;
    let target = cond.target.to_poly(n)?;
    let mut base = model.invariants[node].clone();
    if let Some(d) = cond.unsafe_disjunct {
        let u = model.unsafe_sets[node]
            .get(d)
            .ok_or_else(|| format!("node {} has no unsafe disjunct {d}", cond.node))?;
        base.conjoin(u);
    }
    let mut set = SetPolys::from_set(&base);
    for (i, lim) in cond.box_limits.iter().enumerate() {
        let l = parse_rat(lim).map_err(|e| e.to_string())?;
        if l.is_zero() {
            continue;
        }
        let mut up = Poly::constant(n, l.clone());
        up.add_term(unit(n, i), crate::rat::rat(-1));
        let mut dn = Poly::constant(n, l);
        dn.add_term(unit(n, i), crate::rat::rat(1));
        set.ineqs.push(up);
        set.ineqs.push(dn);
    }
    for extra in &cond.extra_ineqs {
        set.ineqs.push(extra.to_poly(n)?);
    }
    push_sos_condition(prob, n, cond.gram_degree.max(target.degree()), &set, opts, tag, |m, _| {
        m.add_known(&target, &crate::rat::rat(1));
    })?;
    Ok(())
}

fn unit(n: usize, i: usize) -> Vec<u32> {
    let mut m = vec![0; n];
    m[i] = 1;
    m
}

fn pad_poly(p: &Poly, nv: usize) -> Poly {
    let mut out = Poly::zero(nv);
    for (m, c) in &p.terms {
        let mut mm = m.clone();
        mm.resize(nv, 0);
        out.terms.insert(mm, c.clone());
    }
    out
}

/// Rounds a float solution onto rationals with bounded denominators, then
/// repairs the linear-equality rows exactly (one exact solve for a nullspace
/// correction) so the certificate satisfies them literally.
pub fn round_solution(
    prob: &ConicProblem,
    float_values: &[f64],
    max_den: u64,
) -> Result<Vec<Rat>, String> {
    let mut vals: Vec<Rat> = float_values.iter().map(|v| rationalize(*v, max_den)).collect();
    if prob.lin_eq.is_empty() {
        return Ok(vals);
    }
    // columns involved in any equality
    let mut cols: Vec<usize> = prob
        .lin_eq
        .iter()
        .flat_map(|r| r.coeffs.iter().map(|(i, _)| *i))
        .collect();
    cols.sort_unstable();
    cols.dedup();
    let col_pos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(p, c)| (*c, p)).collect();
    let mut a = RMat::zeros(prob.lin_eq.len(), cols.len());
    let mut resid = Vec::with_capacity(prob.lin_eq.len());
    for (ri, row) in prob.lin_eq.iter().enumerate() {
        let mut lhs = Rat::zero();
        for (i, c) in &row.coeffs {
            a[(ri, col_pos[i])] = &a[(ri, col_pos[i])] + c;
            lhs += c * &vals[*i];
        }
        resid.push(&row.rhs - lhs);
    }
    match a.solve_any(&resid) {
        Some(correction) => {
            for (p, c) in cols.iter().zip(correction) {
                if !c.is_zero() {
                    vals[*p] = &vals[*p] + &c;
                }
            }
            Ok(vals)
        }
        None => Err("equality repair failed: rounded point is inconsistent".into()),
    }
}

/// The complete monomial basis helper re-exported for certificate display.
pub fn poly_basis(n: usize, d: u32) -> Vec<Vec<u32>> {
    monomials(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::relax::conic::VarKind;

    #[test]
    fn rounding_repair_restores_equalities() {
        let mut prob = ConicProblem::new();
        let a = prob.add_var("a", VarKind::Scalar);
        let b = prob.add_var("b", VarKind::Scalar);
        let ia = prob.scalar_index(a);
        let ib = prob.scalar_index(b);
        // a + 2b = 1
        prob.lin_eq.push(ConicProblem::row(vec![(ia, rat(1)), (ib, rat(2))], rat(1)));
        let vals = round_solution(&prob, &[0.33333333, 0.33333337], 1000).unwrap();
        let lhs = &vals[ia] + rat(2) * &vals[ib];
        assert_eq!(lhs, rat(1));
        // stays close to the float input
        assert!((crate::rat::rat_to_f64(&vals[ia]) - 0.3333).abs() < 1e-2);
    }

    #[test]
    fn polydata_round_trip() {
        let mut p = Poly::zero(2);
        p.add_term(vec![1, 1], crate::rat::ratio(-3, 7));
        p.add_term(vec![0, 0], rat(5));
        let d = PolyData::from_poly(&p);
        assert_eq!(d.to_poly(2).unwrap(), p);
    }
}
