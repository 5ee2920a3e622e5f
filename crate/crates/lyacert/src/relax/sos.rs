//! Degree-bounded sum-of-squares assembly for polynomial graph models:
//! nonnegativity of a polynomial on a semialgebraic set is relaxed to an
//! exact coefficient match between the target, multiplier combinations of
//! the constraints, and a PSD Gram form.

use super::conic::{ConicProblem, VarKind, VarRef};
use super::rates::RatePlan;
use crate::model::semialg::{AffExpr, QuadExpr, SemialgebraicSet};
use crate::model::types::{EdgeLabel, GraphModel};
use crate::rat::{rat, Rat};
use num::{One, Zero};
use std::collections::BTreeMap;

pub type Monomial = Vec<u32>;

/// Sparse multivariate polynomial with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![0; nvars];
        m[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(m, Rat::one());
        p
    }

    pub fn from_affine(a: &AffExpr) -> Self {
        let n = a.dim();
        let mut p = Poly::constant(n, a.constant.clone());
        for (i, c) in a.coeffs.iter().enumerate() {
            if !c.is_zero() {
                p.add_term({
                    let mut m = vec![0; n];
                    m[i] = 1;
                    m
                }, c.clone());
            }
        }
        p
    }

    pub fn from_quad(q: &QuadExpr) -> Self {
        let n = q.dim();
        let mut p = Poly::zero(n);
        for a in 0..=n {
            for b in 0..=n {
                let c = &q.mat[(a, b)];
                if c.is_zero() {
                    continue;
                }
                let mut m = vec![0; n];
                if a < n {
                    m[a] += 1;
                }
                if b < n {
                    m[b] += 1;
                }
                p.add_term(m, c.clone());
            }
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        assert_eq!(m.len(), self.nvars);
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            // keep the map sparse
            let key: Vec<Monomial> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scaled(&self, s: &Rat) -> Poly {
        if s.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, Rat::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        let mut s = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.iter().enumerate() {
                for _ in 0..*e {
                    t *= &x[i];
                }
            }
            s += t;
        }
        s
    }

    /// substitutes variable i by the given polynomials (over a new space)
    pub fn compose(&self, subs: &[Poly]) -> Poly {
        assert_eq!(subs.len(), self.nvars);
        let new_n = subs.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Poly::zero(new_n);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(new_n, c.clone());
            for (i, e) in m.iter().enumerate() {
                if *e > 0 {
                    t = t.mul(&subs[i].pow(*e));
                }
            }
            out = out.add(&t);
        }
        out
    }
}

/// All monomials of total degree <= d over n variables, graded lexicographic.
pub fn monomials(n: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(out: &mut Vec<Monomial>, cur: &mut Vec<u32>, pos: usize, left: u32) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[pos] = e;
            rec(out, cur, pos + 1, left - e);
        }
        cur[pos] = 0;
    }
    rec(&mut out, &mut cur, 0, d);
    out.sort_by_key(|m| (m.iter().sum::<u32>(), m.clone()));
    out.dedup();
    out
}

/// A polynomial whose coefficients are decision scalars over a fixed basis.
#[derive(Clone, Debug)]
pub struct PolyVar {
    pub var: VarRef,
    pub basis: Vec<Monomial>,
}

impl PolyVar {
    pub fn new(prob: &mut ConicProblem, name: &str, nvars: usize, degree: u32) -> Self {
        let basis = monomials(nvars, degree);
        let var = prob.add_var(name, VarKind::FreeDiag(basis.len()));
        PolyVar { var, basis }
    }

    pub fn extract(&self, prob: &ConicProblem, values: &[Rat]) -> Poly {
        let nvars = self.basis.first().map(|m| m.len()).unwrap_or(0);
        let mut p = Poly::zero(nvars);
        for (k, m) in self.basis.iter().enumerate() {
            let v = values[prob.diag_index(self.var, k)].clone();
            if !v.is_zero() {
                p.add_term(m.clone(), v);
            }
        }
        p
    }
}

/// Accumulates a polynomial identity: sum over contributions must be the
/// zero polynomial; every monomial becomes one linear equation.
pub struct PolyMatch {
    nvars: usize,
    rows: BTreeMap<Monomial, (Vec<(usize, Rat)>, Rat)>,
}

impl PolyMatch {
    pub fn new(nvars: usize) -> Self {
        PolyMatch { nvars, rows: BTreeMap::new() }
    }

    fn slot(&mut self, m: &Monomial) -> &mut (Vec<(usize, Rat)>, Rat) {
        self.rows.entry(m.clone()).or_insert_with(|| (Vec::new(), Rat::zero()))
    }

    pub fn add_known(&mut self, p: &Poly, coeff: &Rat) {
        assert_eq!(p.nvars, self.nvars);
        for (m, c) in &p.terms {
            self.slot(m).1 += c * coeff;
        }
    }

    /// adds s * p for one decision scalar s
    pub fn add_scaled_scalar(&mut self, idx: usize, p: &Poly, coeff: &Rat) {
        for (m, c) in &p.terms {
            self.slot(m).0.push((idx, c * coeff));
        }
    }

    /// adds coeff * (polynomial with decision coefficients) composed through
    /// fixed substitution polys
    pub fn add_polyvar(
        &mut self,
        prob: &ConicProblem,
        pv: &PolyVar,
        subs: Option<&[Poly]>,
        coeff: &Rat,
    ) {
        for (k, m) in pv.basis.iter().enumerate() {
            let mono = {
                let mut p = Poly::zero(m.len());
                p.terms.insert(m.clone(), Rat::one());
                p
            };
            let composed = match subs {
                Some(s) => mono.compose(s),
                None => mono,
            };
            self.add_scaled_scalar(prob.diag_index(pv.var, k), &composed, coeff);
        }
    }

    /// adds sign * Z^T G Z for a Gram variable over the monomial basis
    pub fn add_gram(&mut self, prob: &ConicProblem, gram: VarRef, basis: &[Monomial], sign: &Rat) {
        for a in 0..basis.len() {
            for b in a..basis.len() {
                let m: Monomial = basis[a].iter().zip(&basis[b]).map(|(x, y)| x + y).collect();
                let factor = if a == b { sign.clone() } else { sign * rat(2) };
                self.slot(&m).0.push((prob.sym_index(gram, a, b), factor));
            }
        }
    }

    /// Emits one equation per monomial. Errors when a monomial has a nonzero
    /// constant part and no decision variable can touch it.
    pub fn emit(self, prob: &mut ConicProblem) -> Result<(), String> {
        for (m, (coeffs, konst)) in self.rows {
            if coeffs.is_empty() {
                if !konst.is_zero() {
                    return Err(format!(
                        "monomial {m:?} cannot be matched at the given degree bounds"
                    ));
                }
                continue;
            }
            prob.lin_eq.push(ConicProblem::row(coeffs, -konst));
        }
        Ok(())
    }
}

/// One "target >= 0 on set" condition relaxed with SOS multipliers. Returns
/// the handles needed to reconstruct the certificate.
#[derive(Debug)]
pub struct SosCondition {
    pub gram: VarRef,
    pub gram_basis: Vec<Monomial>,
    pub lin_multipliers: Option<VarRef>,
    pub pair_multipliers: Option<VarRef>,
    pub eq_multipliers: Vec<PolyVar>,
}

#[derive(Clone, Debug)]
pub struct SosOpts {
    /// degree bound for the free multipliers on equality constraints
    pub eq_multiplier_degree: u32,
    /// pairwise products of inequality constraints
    pub pair_products: bool,
    pub eps: Rat,
}

impl Default for SosOpts {
    fn default() -> Self {
        // invariance conditions are non-strict; strict targets carry their
        // own separation constant
        SosOpts { eq_multiplier_degree: 2, pair_products: true, eps: Rat::zero() }
    }
}

/// Constraint lists for one condition: `ineqs` are f_p >= 0, `eqs` are
/// h_l = 0, all over the same variable space as the target.
pub struct SetPolys {
    pub ineqs: Vec<Poly>,
    pub eqs: Vec<Poly>,
}

impl SetPolys {
    pub fn from_set(set: &SemialgebraicSet) -> Self {
        let mut ineqs = Vec::new();
        let mut eqs = Vec::new();
        for e in &set.lin_ineq {
            ineqs.push(Poly::from_affine(e));
        }
        for q in &set.quad_ineq {
            ineqs.push(Poly::from_quad(q));
        }
        for e in &set.lin_eq {
            eqs.push(Poly::from_affine(e));
        }
        for q in &set.quad_eq {
            eqs.push(Poly::from_quad(q));
        }
        SetPolys { ineqs, eqs }
    }

    pub fn push_box(&mut self, nvars: usize, coords: std::ops::Range<usize>) {
        for i in coords {
            let mut up = Poly::constant(nvars, Rat::one());
            up.add_term(
                {
                    let mut m = vec![0; nvars];
                    m[i] = 1;
                    m
                },
                rat(-1),
            );
            let mut dn = Poly::constant(nvars, Rat::one());
            dn.add_term(
                {
                    let mut m = vec![0; nvars];
                    m[i] = 1;
                    m
                },
                Rat::one(),
            );
            self.ineqs.push(up);
            self.ineqs.push(dn);
        }
    }
}

/// Pushes `known + sum_vars >= 0 on {f_p >= 0, h_l = 0}` as an SOS
/// membership; the target is delivered through a callback that writes its
/// terms into the matcher so decision polynomials can participate.
pub fn push_sos_condition(
    prob: &mut ConicProblem,
    nvars: usize,
    target_degree: u32,
    set: &SetPolys,
    opts: &SosOpts,
    tag: &str,
    fill_target: impl FnOnce(&mut PolyMatch, &ConicProblem),
) -> Result<SosCondition, String> {
    let mut m = PolyMatch::new(nvars);
    fill_target(&mut m, prob);
    // minus multipliers times constraints
    let lin = if set.ineqs.is_empty() {
        None
    } else {
        Some(prob.add_var(format!("tau[{tag}]"), VarKind::NonnegDiag(set.ineqs.len())))
    };
    if let Some(lin) = lin {
        for (p_i, f) in set.ineqs.iter().enumerate() {
            m.add_scaled_scalar(prob.diag_index(lin, p_i), f, &rat(-1));
        }
    }
    let pair = if opts.pair_products && set.ineqs.len() > 1 {
        let pairs = set.ineqs.len() * (set.ineqs.len() - 1) / 2;
        Some(prob.add_var(format!("tau2[{tag}]"), VarKind::NonnegDiag(pairs)))
    } else {
        None
    };
    if let Some(pair) = pair {
        let mut slot = 0;
        for a in 0..set.ineqs.len() {
            for b in (a + 1)..set.ineqs.len() {
                let prod = set.ineqs[a].mul(&set.ineqs[b]);
                m.add_scaled_scalar(prob.diag_index(pair, slot), &prod, &rat(-1));
                slot += 1;
            }
        }
    }
    let mut eq_multipliers = Vec::new();
    for (l, h) in set.eqs.iter().enumerate() {
        // rho_l free polynomial; degree chosen so rho*h fits the target
        let d = opts.eq_multiplier_degree.min(target_degree.saturating_sub(h.degree()));
        let rho = PolyVar::new(prob, &format!("rho{l}[{tag}]"), nvars, d);
        for (k, mono) in rho.basis.iter().enumerate() {
            let mut basis_poly = Poly::zero(nvars);
            basis_poly.terms.insert(mono.clone(), Rat::one());
            let prod = basis_poly.mul(h);
            m.add_scaled_scalar(prob.diag_index(rho.var, k), &prod, &rat(-1));
        }
        eq_multipliers.push(rho);
    }
    // minus the Gram form
    let half = target_degree.div_ceil(2);
    let gram_basis = monomials(nvars, half);
    let gram = prob.add_var(format!("G[{tag}]"), VarKind::SosGram(gram_basis.len()));
    m.add_gram(prob, gram, &gram_basis, &rat(-1));
    // strictness slack on the constant monomial
    m.add_known(&Poly::constant(nvars, opts.eps.clone()), &rat(-1));
    m.emit(prob)?;
    Ok(SosCondition { gram, gram_basis, lin_multipliers: lin, pair_multipliers: pair, eq_multipliers })
}

pub struct GraphSosVars {
    pub sigma: Vec<Option<PolyVar>>,
    pub conditions: Vec<(usize, SosCondition)>,
}

/// Node-wise polynomial invariance: for every edge,
/// -sigma_to(T(x, w)) + theta sigma_from(x) - mu is SOS on the edge's
/// pre-state set. Start-outgoing edges use theta = 0.
pub fn assemble_graph_sos(
    model: &GraphModel,
    rates: &RatePlan,
    degrees: &[u32],
    opts: &SosOpts,
) -> Result<(ConicProblem, GraphSosVars), String> {
    let n = model.n();
    let mut prob = ConicProblem::new();
    let sigma: Vec<Option<PolyVar>> = (0..model.num_nodes())
        .map(|i| {
            (i != model.start).then(|| {
                PolyVar::new(
                    &mut prob,
                    &format!("sigma[{}]", model.node_names[i]),
                    n,
                    degrees[i],
                )
            })
        })
        .collect();
    let mut conditions = Vec::new();
    for (ei, edge) in model.edges.iter().enumerate() {
        {
            let mut gate = edge.passport.clone();
            gate.conjoin(&model.invariants[edge.from]);
            if !gate.lin_feasible() {
                continue;
            }
        }
        let EdgeLabel::Affine(t) = &edge.label else {
            return Err("SOS assembly needs affine transition labels".into());
        };
        if t.n_v() > 0 {
            return Err("binary selectors in labels are not supported by the SOS path".into());
        }
        let q = t.n_w();
        let nv = n + q;
        let (theta, mu) = rates
            .get(edge.from, edge.to, edge.k)
            .cloned()
            .ok_or_else(|| format!("no rates for edge {ei}"))?;
        if edge.from == model.start && !theta.is_zero() {
            return Err("edges out of the start node must carry theta = 0".into());
        }
        // substitution polys for sigma_to(T(x, w)) over (x, w)
        let subs: Vec<Poly> = (0..n)
            .map(|row| {
                let mut p = Poly::constant(nv, t.e[row].clone());
                for j in 0..n {
                    if !t.a[(row, j)].is_zero() {
                        p.add_term(
                            {
                                let mut m = vec![0; nv];
                                m[j] = 1;
                                m
                            },
                            t.a[(row, j)].clone(),
                        );
                    }
                }
                for j in 0..q {
                    if !t.b[(row, j)].is_zero() {
                        p.add_term(
                            {
                                let mut m = vec![0; nv];
                                m[n + j] = 1;
                                m
                            },
                            t.b[(row, j)].clone(),
                        );
                    }
                }
                p
            })
            .collect();
        // pre-state set over (x, w): invariants + passport (x-level, padded)
        // + label constraints + the w box
        let mut set = {
            let mut s = model.invariants[edge.from].clone();
            s.conjoin(&edge.passport);
            let mut polys = SetPolys::from_set(&s);
            // pad x-level polys into (x, w)
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
        let sig_to = sigma[edge.to]
            .clone()
            .ok_or("edge into the start node is not allowed")?;
        let deg_target = degrees[edge.to].max(degrees[edge.from]).max(2);
        let tag = format!(
            "{}->{}k{}",
            model.node_names[edge.from], model.node_names[edge.to], edge.k
        );
        let sig_from = sigma[edge.from].clone();
        let cond = push_sos_condition(
            &mut prob,
            nv,
            deg_target,
            &set,
            opts,
            &tag,
            |m, prob| {
                m.add_polyvar(prob, &sig_to, Some(&subs), &rat(-1));
                if let Some(sf) = &sig_from {
                    if !theta.is_zero() {
                        // sigma_from lives over x alone: pad
                        let pads: Vec<Poly> = (0..n).map(|i| Poly::var(nv, i)).collect();
                        m.add_polyvar(prob, sf, Some(&pads), &theta);
                    }
                }
                m.add_known(&Poly::constant(nv, mu.clone()), &rat(-1));
            },
        )?;
        conditions.push((ei, cond));
    }
    Ok((prob, GraphSosVars { sigma, conditions }))
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::sdp::{solve_sdp, SdpSettings, SdpStatus};

    #[test]
    fn poly_arithmetic() {
        // (x + 1)^2 = x^2 + 2x + 1
        let x = Poly::var(1, 0);
        let p = x.add(&Poly::constant(1, Rat::one()));
        let sq = p.mul(&p);
        assert_eq!(sq.eval(&[rat(3)]), rat(16));
        assert_eq!(sq.degree(), 2);
        // compose x := 2y
        let c = sq.compose(&[Poly::var(1, 0).scaled(&rat(2))]);
        assert_eq!(c.eval(&[rat(1)]), rat(9));
    }

    #[test]
    fn monomial_count_matches_binomial() {
        // C(n + d, d) monomials of degree <= d
        assert_eq!(monomials(2, 2).len(), 6);
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(7, 1).len(), 8);
    }

    #[test]
    fn sos_certifies_square_plus_constraint() {
        // x - 1 >= 0 on {x >= 1}: tau * (x - 1), trivial
        let mut prob = ConicProblem::new();
        let set = SetPolys {
            ineqs: vec![Poly::from_affine(&AffExpr {
                coeffs: vec![Rat::one()],
                constant: rat(-1),
            })],
            eqs: vec![],
        };
        let target = Poly::from_affine(&AffExpr { coeffs: vec![Rat::one()], constant: rat(-1) });
        push_sos_condition(&mut prob, 1, 2, &set, &Default::default(), "t", |m, _| {
            m.add_known(&target, &Rat::one());
        })
        .unwrap();
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible);

        // -x >= 0 on {x >= 1} is false
        let mut prob = ConicProblem::new();
        let set = SetPolys {
            ineqs: vec![Poly::from_affine(&AffExpr {
                coeffs: vec![Rat::one()],
                constant: rat(-1),
            })],
            eqs: vec![],
        };
        let target = Poly::from_affine(&AffExpr { coeffs: vec![rat(-1)], constant: Rat::zero() });
        push_sos_condition(&mut prob, 1, 2, &set, &Default::default(), "t", |m, _| {
            m.add_known(&target, &Rat::one());
        })
        .unwrap();
        let r = solve_sdp(&prob.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unmatchable_monomial_is_named() {
        // degree-4 target with degree-1 Gram basis cannot match x^4
        let mut prob = ConicProblem::new();
        let set = SetPolys { ineqs: vec![], eqs: vec![] };
        let x4 = {
            let mut p = Poly::zero(1);
            p.terms.insert(vec![4], Rat::one());
            p
        };
        let err = push_sos_condition(&mut prob, 1, 2, &set, &Default::default(), "t", |m, _| {
            m.add_known(&x4, &Rat::one());
        })
        .unwrap_err();
        assert!(err.contains("[4]"), "{err}");
    }
}
