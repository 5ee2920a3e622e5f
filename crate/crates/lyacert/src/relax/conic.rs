//! Block-structured LP/SDP feasibility problems with named decision
//! variables. Coefficients are kept exact so the same assembly serves both
//! the float solvers and the exact certificate checker.

use crate::linalg::Mat;
use crate::rat::{fmt_rat, rat_to_f64, Rat};
use crate::rlinalg::RMat;
use crate::solver::lp::{Cmp, LinProg};
use crate::solver::sdp::{LmiBlock, SdpProblem};
use num::Zero;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// free symmetric matrix, stored as the upper triangle row-major
    SymMat(usize),
    /// PSD-constrained symmetric matrix (sum-of-squares Gram)
    SosGram(usize),
    FreeMat(usize, usize),
    NonnegDiag(usize),
    FreeDiag(usize),
    Scalar,
    NonnegScalar,
}

impl VarKind {
    pub fn num_scalars(&self) -> usize {
        match self {
            VarKind::SymMat(d) | VarKind::SosGram(d) => d * (d + 1) / 2,
            VarKind::FreeMat(r, c) => r * c,
            VarKind::NonnegDiag(d) | VarKind::FreeDiag(d) => *d,
            VarKind::Scalar | VarKind::NonnegScalar => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarRef(pub usize);

/// One LMI block, affine in the scalar decision components:
/// konst + sum_i coeff_i * s_i  >=  0 (PSD).
#[derive(Clone, Debug)]
pub struct LmiExpr {
    pub dim: usize,
    pub konst: RMat,
    pub terms: Vec<(usize, RMat)>,
    pub tag: String,
}

#[derive(Clone, Debug, Default)]
pub struct LinRow {
    pub coeffs: Vec<(usize, Rat)>,
    pub rhs: Rat,
}

#[derive(Clone, Debug, Default)]
pub struct ConicProblem {
    pub vars: Vec<(String, VarKind)>,
    offsets: Vec<usize>,
    num_scalars: usize,
    pub lmi: Vec<LmiExpr>,
    pub lin_eq: Vec<LinRow>,
    /// each row: coeffs . s >= rhs
    pub lin_ineq: Vec<LinRow>,
    /// minimized linear objective; empty = feasibility
    pub objective: Vec<(usize, Rat)>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind) -> VarRef {
        self.offsets.push(self.num_scalars);
        self.num_scalars += kind.num_scalars();
        self.vars.push((name.into(), kind));
        VarRef(self.vars.len() - 1)
    }

    pub fn num_scalars(&self) -> usize {
        self.num_scalars
    }

    pub fn offset(&self, v: VarRef) -> usize {
        self.offsets[v.0]
    }

    pub fn kind(&self, v: VarRef) -> &VarKind {
        &self.vars[v.0].1
    }

    /// scalar index of the (a, b) entry of a symmetric-matrix variable
    pub fn sym_index(&self, v: VarRef, a: usize, b: usize) -> usize {
        let d = match self.kind(v) {
            VarKind::SymMat(d) | VarKind::SosGram(d) => *d,
            other => panic!("sym_index on {other:?}"),
        };
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        // row-major upper triangle
        self.offset(v) + i * d - i * i.saturating_sub(1) / 2 - i + j
    }

    /// scalar index of entry (r, c) of a free matrix variable
    pub fn mat_index(&self, v: VarRef, r: usize, c: usize) -> usize {
        let cols = match self.kind(v) {
            VarKind::FreeMat(_, cc) => *cc,
            other => panic!("mat_index on {other:?}"),
        };
        self.offset(v) + r * cols + c
    }

    pub fn diag_index(&self, v: VarRef, i: usize) -> usize {
        self.offset(v) + i
    }

    pub fn scalar_index(&self, v: VarRef) -> usize {
        self.offset(v)
    }

    /// Reconstructs a symmetric matrix variable from a flat value vector.
    pub fn extract_sym(&self, v: VarRef, values: &[Rat]) -> RMat {
        let d = match self.kind(v) {
            VarKind::SymMat(d) | VarKind::SosGram(d) => *d,
            other => panic!("extract_sym on {other:?}"),
        };
        let mut m = RMat::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let val = values[self.sym_index(v, a, b)].clone();
                m[(a, b)] = val.clone();
                m[(b, a)] = val;
            }
        }
        m
    }

    pub fn extract_mat(&self, v: VarRef, values: &[Rat]) -> RMat {
        let (r, c) = match self.kind(v) {
            VarKind::FreeMat(r, c) => (*r, *c),
            other => panic!("extract_mat on {other:?}"),
        };
        let mut m = RMat::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = values[self.mat_index(v, i, j)].clone();
            }
        }
        m
    }

    pub fn extract_diag(&self, v: VarRef, values: &[Rat]) -> Vec<Rat> {
        let d = match self.kind(v) {
            VarKind::NonnegDiag(d) | VarKind::FreeDiag(d) => *d,
            other => panic!("extract_diag on {other:?}"),
        };
        (0..d).map(|i| values[self.diag_index(v, i)].clone()).collect()
    }

    pub fn new_block(&mut self, dim: usize, tag: impl Into<String>) -> usize {
        self.lmi.push(LmiExpr {
            dim,
            konst: RMat::zeros(dim, dim),
            terms: Vec::new(),
            tag: tag.into(),
        });
        self.lmi.len() - 1
    }

    fn term_mut(&mut self, block: usize, scalar: usize, dim: usize) -> &mut RMat {
        let b = &mut self.lmi[block];
        if let Some(pos) = b.terms.iter().position(|(s, _)| *s == scalar) {
            &mut b.terms[pos].1
        } else {
            b.terms.push((scalar, RMat::zeros(dim, dim)));
            let last = b.terms.len() - 1;
            &mut b.terms[last].1
        }
    }

    pub fn block_add_const(&mut self, block: usize, m: &RMat) {
        self.lmi[block].konst = self.lmi[block].konst.add(m);
    }

    /// adds coeff * L^T V L for a symmetric-matrix variable V
    pub fn block_add_congruence(&mut self, block: usize, v: VarRef, l: &RMat, coeff: &Rat) {
        let d = match self.kind(v) {
            VarKind::SymMat(d) | VarKind::SosGram(d) => *d,
            other => panic!("congruence on {other:?}"),
        };
        assert_eq!(l.r, d, "congruence selector shape");
        let dim = self.lmi[block].dim;
        assert_eq!(l.c, dim);
        // precompute rows of L for the basis expansion: coefficient of the
        // (a,b) entry is L_a^T L_b + L_b^T L_a (halved on the diagonal)
        for a in 0..d {
            for b in a..d {
                let idx = self.sym_index(v, a, b);
                let mut m = RMat::zeros(dim, dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let mut val = &l[(a, i)] * &l[(b, j)] + &l[(b, i)] * &l[(a, j)];
                        if a == b {
                            val = val * crate::rat::ratio(1, 2);
                        }
                        if !val.is_zero() {
                            m[(i, j)] = val * coeff;
                        }
                    }
                }
                if m.a.iter().any(|x| !x.is_zero()) {
                    let t = self.term_mut(block, idx, dim);
                    *t = t.add(&m);
                }
            }
        }
    }

    /// adds coeff * He(V * rows * l) for a free-matrix variable V
    /// (rows: h x d_mid, l: d_mid x dim, V: dim' x h placed with dim' = dim)
    pub fn block_add_he_mat(&mut self, block: usize, v: VarRef, rows: &RMat, l: &RMat, coeff: &Rat) {
        let (r, c) = match self.kind(v) {
            VarKind::FreeMat(r, c) => (*r, *c),
            other => panic!("he_mat on {other:?}"),
        };
        let dim = self.lmi[block].dim;
        assert_eq!(r, dim, "He(Y H L): Y rows must match block dim");
        assert_eq!(rows.r, c, "He(Y H L): Y cols must match H rows");
        let hl = rows.matmul(l);
        assert_eq!(hl.c, dim);
        for i in 0..r {
            for j in 0..c {
                // E_ij * (H L) + transpose
                let idx = self.mat_index(v, i, j);
                let mut m = RMat::zeros(dim, dim);
                for col in 0..dim {
                    if hl[(j, col)].is_zero() {
                        continue;
                    }
                    let val = &hl[(j, col)] * coeff;
                    m[(i, col)] = &m[(i, col)] + &val;
                    m[(col, i)] = &m[(col, i)] + &val;
                }
                if m.a.iter().any(|x| !x.is_zero()) {
                    let t = self.term_mut(block, idx, dim);
                    *t = t.add(&m);
                }
            }
        }
    }

    /// adds coeff * He(left * V * right) for a free-matrix variable V
    pub fn block_add_he_general(
        &mut self,
        block: usize,
        v: VarRef,
        left: &RMat,
        right: &RMat,
        coeff: &Rat,
    ) {
        let (r, c) = match self.kind(v) {
            VarKind::FreeMat(r, c) => (*r, *c),
            other => panic!("he_general on {other:?}"),
        };
        let dim = self.lmi[block].dim;
        assert_eq!(left.r, dim);
        assert_eq!(left.c, r);
        assert_eq!(right.r, c);
        assert_eq!(right.c, dim);
        for i in 0..r {
            for j in 0..c {
                let idx = self.mat_index(v, i, j);
                let mut m = RMat::zeros(dim, dim);
                for a in 0..dim {
                    if left[(a, i)].is_zero() {
                        continue;
                    }
                    for b in 0..dim {
                        if right[(j, b)].is_zero() {
                            continue;
                        }
                        let val = &left[(a, i)] * &right[(j, b)] * coeff;
                        m[(a, b)] = &m[(a, b)] + &val;
                        m[(b, a)] = &m[(b, a)] + &val;
                    }
                }
                if m.a.iter().any(|x| !x.is_zero()) {
                    let t = self.term_mut(block, idx, dim);
                    *t = t.add(&m);
                }
            }
        }
    }

    /// adds coeff * W^T D W for a diagonal variable D
    pub fn block_add_diag_quad(&mut self, block: usize, v: VarRef, w: &RMat, coeff: &Rat) {
        let d = match self.kind(v) {
            VarKind::NonnegDiag(d) | VarKind::FreeDiag(d) => *d,
            other => panic!("diag_quad on {other:?}"),
        };
        assert_eq!(w.r, d);
        let dim = self.lmi[block].dim;
        for i in 0..d {
            let idx = self.diag_index(v, i);
            let mut m = RMat::zeros(dim, dim);
            for a in 0..dim {
                for b in 0..dim {
                    let val = &w[(i, a)] * &w[(i, b)];
                    if !val.is_zero() {
                        m[(a, b)] = val * coeff;
                    }
                }
            }
            if m.a.iter().any(|x| !x.is_zero()) {
                let t = self.term_mut(block, idx, dim);
                *t = t.add(&m);
            }
        }
    }

    /// adds M as the block coefficient of the i-th component of a diagonal
    /// variable (for multiplier families whose basis matrices are arbitrary)
    pub fn block_add_diag_component(&mut self, block: usize, v: VarRef, i: usize, m: &RMat) {
        let idx = self.diag_index(v, i);
        let dim = self.lmi[block].dim;
        assert_eq!(m.r, dim);
        let t = self.term_mut(block, idx, dim);
        *t = t.add(m);
    }

    /// adds coeff * s * M for a scalar variable s
    pub fn block_add_scalar_mat(&mut self, block: usize, v: VarRef, m: &RMat, coeff: &Rat) {
        let idx = self.scalar_index(v);
        let scaled = m.scaled(coeff);
        let dim = self.lmi[block].dim;
        assert_eq!(m.r, dim);
        let t = self.term_mut(block, idx, dim);
        *t = t.add(&scaled);
    }

    /// adds a scalar entry coefficient to a linear row under construction
    pub fn row(coeffs: Vec<(usize, Rat)>, rhs: Rat) -> LinRow {
        LinRow { coeffs, rhs }
    }

    /// Evaluates one LMI block at exact values.
    pub fn eval_block(&self, block: usize, values: &[Rat]) -> RMat {
        let b = &self.lmi[block];
        let mut m = b.konst.clone();
        for (idx, coeff) in &b.terms {
            if !values[*idx].is_zero() {
                m = m.add(&coeff.scaled(&values[*idx]));
            }
        }
        m
    }

    /// Sign constraints implied by variable kinds, as (scalar, must_be_nonneg).
    fn kind_bounds(&self) -> Vec<usize> {
        let mut nonneg = Vec::new();
        for (vi, (_, kind)) in self.vars.iter().enumerate() {
            match kind {
                VarKind::NonnegDiag(d) => {
                    for i in 0..*d {
                        nonneg.push(self.offsets[vi] + i);
                    }
                }
                VarKind::NonnegScalar => nonneg.push(self.offsets[vi]),
                _ => {}
            }
        }
        nonneg
    }

    /// Lowers to the dense SDP solver's form (PSD Gram variables get their
    /// own identity blocks, nonnegative scalars become inequality rows).
    pub fn lower_sdp(&self) -> SdpProblem {
        let mut p = SdpProblem {
            num_vars: self.num_scalars,
            objective: self
                .objective
                .iter()
                .map(|(i, c)| (*i, rat_to_f64(c)))
                .collect(),
            ..Default::default()
        };
        for b in &self.lmi {
            p.blocks.push(LmiBlock {
                dim: b.dim,
                konst: b.konst.to_f64(),
                terms: b.terms.iter().map(|(i, m)| (*i, m.to_f64())).collect(),
            });
        }
        for (vi, (_, kind)) in self.vars.iter().enumerate() {
            if let VarKind::SosGram(d) = kind {
                // the Gram matrix itself must be PSD
                let mut blk = LmiBlock { dim: *d, konst: Mat::zeros(*d, *d), terms: Vec::new() };
                for a in 0..*d {
                    for b in a..*d {
                        let idx = self.sym_index(VarRef(vi), a, b);
                        let mut m = Mat::zeros(*d, *d);
                        m[(a, b)] = 1.0;
                        m[(b, a)] = 1.0;
                        blk.terms.push((idx, m));
                    }
                }
                p.blocks.push(blk);
            }
        }
        for idx in self.kind_bounds() {
            p.lin_ineq.push((vec![(idx, 1.0)], 0.0));
        }
        for r in &self.lin_eq {
            p.lin_eq.push((
                r.coeffs.iter().map(|(i, c)| (*i, rat_to_f64(c))).collect(),
                rat_to_f64(&r.rhs),
            ));
        }
        for r in &self.lin_ineq {
            p.lin_ineq.push((
                r.coeffs.iter().map(|(i, c)| (*i, rat_to_f64(c))).collect(),
                rat_to_f64(&r.rhs),
            ));
        }
        p
    }

    /// Lowers the purely linear part to the exact LP solver. Errors if any
    /// matrix-cone variable or LMI block of dimension > 1 is present.
    pub fn lower_lp(&self) -> Result<LinProg<Rat>, String> {
        for (name, kind) in &self.vars {
            match kind {
                VarKind::SymMat(d) | VarKind::SosGram(d) if *d > 1 => {
                    return Err(format!("variable {name} is a matrix cone; not an LP"));
                }
                _ => {}
            }
        }
        for b in &self.lmi {
            if b.dim > 1 {
                return Err(format!("LMI block `{}` has dimension {}", b.tag, b.dim));
            }
        }
        let mut p: LinProg<Rat> = LinProg::new(self.num_scalars);
        p.minimize = if self.objective.is_empty() {
            Vec::new()
        } else {
            let mut c = vec![Rat::zero(); self.num_scalars];
            for (i, v) in &self.objective {
                c[*i] = v.clone();
            }
            c
        };
        for idx in self.kind_bounds() {
            p.bounds[idx] = (Some(Rat::zero()), None);
        }
        for b in &self.lmi {
            // scalar inequality: konst + sum coeff*s >= 0
            let mut coeffs = vec![Rat::zero(); self.num_scalars];
            for (i, m) in &b.terms {
                coeffs[*i] = m[(0, 0)].clone();
            }
            p.constrain(coeffs, Cmp::Ge, -b.konst[(0, 0)].clone());
        }
        for r in &self.lin_eq {
            let mut coeffs = vec![Rat::zero(); self.num_scalars];
            for (i, c) in &r.coeffs {
                coeffs[*i] = &coeffs[*i] + c;
            }
            p.constrain(coeffs, Cmp::Eq, r.rhs.clone());
        }
        for r in &self.lin_ineq {
            let mut coeffs = vec![Rat::zero(); self.num_scalars];
            for (i, c) in &r.coeffs {
                coeffs[*i] = &coeffs[*i] + c;
            }
            p.constrain(coeffs, Cmp::Ge, r.rhs.clone());
        }
        Ok(p)
    }

    /// Documented sparse block dump (debugging / external-solver escape
    /// hatch): one line per nonzero, `block row col var value`.
    pub fn to_sparse_text(&self) -> String {
        let mut out = String::from("conic v1\n");
        for (i, (name, kind)) in self.vars.iter().enumerate() {
            out.push_str(&format!("var {i} {name} {kind:?} offset {}\n", self.offsets[i]));
        }
        for (bi, b) in self.lmi.iter().enumerate() {
            out.push_str(&format!("block {bi} dim {} tag {}\n", b.dim, b.tag));
            for i in 0..b.dim {
                for j in 0..b.dim {
                    if !b.konst[(i, j)].is_zero() {
                        out.push_str(&format!(
                            "  const {i} {j} {}\n",
                            fmt_rat(&b.konst[(i, j)])
                        ));
                    }
                }
            }
            for (s, m) in &b.terms {
                for i in 0..b.dim {
                    for j in 0..b.dim {
                        if !m[(i, j)].is_zero() {
                            out.push_str(&format!(
                                "  coef s{s} {i} {j} {}\n",
                                fmt_rat(&m[(i, j)])
                            ));
                        }
                    }
                }
            }
        }
        for r in &self.lin_eq {
            let terms: Vec<String> =
                r.coeffs.iter().map(|(i, c)| format!("s{i}*{}", fmt_rat(c))).collect();
            out.push_str(&format!("eq {} = {}\n", terms.join(" + "), fmt_rat(&r.rhs)));
        }
        for r in &self.lin_ineq {
            let terms: Vec<String> =
                r.coeffs.iter().map(|(i, c)| format!("s{i}*{}", fmt_rat(c))).collect();
            out.push_str(&format!("ge {} >= {}\n", terms.join(" + "), fmt_rat(&r.rhs)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use crate::solver::sdp::{solve_sdp, SdpSettings, SdpStatus};

    #[test]
    fn sym_index_roundtrip() {
        let mut p = ConicProblem::new();
        let v = p.add_var("P", VarKind::SymMat(3));
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..3 {
            for b in a..3 {
                seen.insert(p.sym_index(v, a, b));
                assert_eq!(p.sym_index(v, a, b), p.sym_index(v, b, a));
            }
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(*seen.iter().max().unwrap(), 5);
    }

    #[test]
    fn congruence_matches_direct_product() {
        // block: L^T P L with known P must evaluate to the exact congruence
        let mut p = ConicProblem::new();
        let v = p.add_var("P", VarKind::SymMat(2));
        let l = RMat::from_rows(vec![
            vec![rat(1), rat(2), rat(0)],
            vec![rat(0), rat(1), rat(1)],
        ]);
        let b = p.new_block(3, "t");
        p.block_add_congruence(b, v, &l, &rat(1));
        // P = [[2, 1/2], [1/2, -1]]
        let mut values = vec![Rat::zero(); p.num_scalars()];
        values[p.sym_index(v, 0, 0)] = rat(2);
        values[p.sym_index(v, 0, 1)] = ratio(1, 2);
        values[p.sym_index(v, 1, 1)] = rat(-1);
        let got = p.eval_block(b, &values);
        let pm = RMat::from_rows(vec![
            vec![rat(2), ratio(1, 2)],
            vec![ratio(1, 2), rat(-1)],
        ]);
        let want = l.t().matmul(&pm).matmul(&l);
        assert_eq!(got, want);
    }

    #[test]
    fn he_mat_matches_direct_product() {
        let mut p = ConicProblem::new();
        let y = p.add_var("Y", VarKind::FreeMat(2, 1));
        let h = RMat::from_rows(vec![vec![rat(3), rat(-1)]]); // 1 x 2 rows
        let l = RMat::eye(2);
        let b = p.new_block(2, "t");
        p.block_add_he_mat(b, y, &h, &l, &rat(1));
        let mut values = vec![Rat::zero(); p.num_scalars()];
        values[p.mat_index(y, 0, 0)] = rat(5);
        values[p.mat_index(y, 1, 0)] = rat(-2);
        let got = p.eval_block(b, &values);
        let ym = RMat::from_rows(vec![vec![rat(5)], vec![rat(-2)]]);
        let yh = ym.matmul(&h);
        let want = yh.add(&yh.t());
        assert_eq!(got, want);
    }

    #[test]
    fn lowered_sdp_solves() {
        // P >= I (shifted by constant -I) with P sym 2x2; feasibility
        let mut p = ConicProblem::new();
        let v = p.add_var("P", VarKind::SymMat(2));
        let b = p.new_block(2, "P - I");
        p.block_add_congruence(b, v, &RMat::eye(2), &rat(1));
        p.block_add_const(b, &RMat::eye(2).scaled(&rat(-1)));
        let r = solve_sdp(&p.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Feasible);
        // make it infeasible: also -P >= 0
        let b2 = p.new_block(2, "-P");
        p.block_add_congruence(b2, v, &RMat::eye(2), &rat(-1));
        let r = solve_sdp(&p.lower_sdp(), &SdpSettings::default());
        assert_eq!(r.status, SdpStatus::Infeasible);
    }

    #[test]
    fn lp_lowering() {
        let mut p = ConicProblem::new();
        let s = p.add_var("t", VarKind::Scalar);
        let idx = p.scalar_index(s);
        p.objective = vec![(idx, rat(1))];
        p.lin_ineq.push(ConicProblem::row(vec![(idx, rat(1))], rat(7)));
        let lp = p.lower_lp().unwrap();
        let res = crate::solver::lp::solve(&lp);
        assert_eq!(res.x[idx], rat(7));
    }
}
