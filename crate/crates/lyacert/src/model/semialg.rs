//! Semialgebraic constraint sets: conjunctions of linear/quadratic equalities
//! and inequalities over an indexed variable vector, with exact coefficients.

use crate::rat::Rat;
use crate::rlinalg::RMat;
use crate::solver::lp::{solve, Cmp, LinProg, LpStatus};
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// coeffs . x + constant
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffExpr {
    pub coeffs: Vec<Rat>,
    pub constant: Rat,
}

impl AffExpr {
    pub fn zero(dim: usize) -> Self {
        AffExpr { coeffs: vec![Rat::zero(); dim], constant: Rat::zero() }
    }

    pub fn constant(dim: usize, c: Rat) -> Self {
        AffExpr { coeffs: vec![Rat::zero(); dim], constant: c }
    }

    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = AffExpr::zero(dim);
        e.coeffs[i] = Rat::from_integer(1.into());
        e
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        assert_eq!(x.len(), self.dim());
        let mut s = self.constant.clone();
        for (c, v) in self.coeffs.iter().zip(x) {
            if !c.is_zero() {
                s += c * v;
            }
        }
        s
    }

    pub fn add(&self, other: &AffExpr) -> AffExpr {
        assert_eq!(self.dim(), other.dim());
        AffExpr {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            constant: &self.constant + &other.constant,
        }
    }

    pub fn scaled(&self, s: &Rat) -> AffExpr {
        AffExpr {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            constant: &self.constant * s,
        }
    }

    pub fn neg(&self) -> AffExpr {
        self.scaled(&-Rat::from_integer(1.into()))
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Substitutes x = A y + e (A: dim x new_dim), producing an expression
    /// over y.
    pub fn pullback(&self, a: &RMat, e: &[Rat]) -> AffExpr {
        assert_eq!(a.r, self.dim());
        assert_eq!(e.len(), self.dim());
        let mut coeffs = vec![Rat::zero(); a.c];
        let mut constant = self.constant.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            constant += c * &e[i];
            for j in 0..a.c {
                if !a[(i, j)].is_zero() {
                    coeffs[j] += c * &a[(i, j)];
                }
            }
        }
        AffExpr { coeffs, constant }
    }

    /// Embeds into a larger variable space, placing the old variables at
    /// `offset`.
    pub fn embed(&self, new_dim: usize, offset: usize) -> AffExpr {
        assert!(offset + self.dim() <= new_dim);
        let mut coeffs = vec![Rat::zero(); new_dim];
        coeffs[offset..offset + self.dim()].clone_from_slice(&self.coeffs);
        AffExpr { coeffs, constant: self.constant.clone() }
    }
}

/// xbar^T Q xbar for xbar = [x; 1]; Q symmetric of side dim+1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadExpr {
    pub mat: RMat,
}

impl QuadExpr {
    pub fn dim(&self) -> usize {
        self.mat.r - 1
    }

    pub fn from_mat(mat: RMat) -> Self {
        assert!(mat.is_symmetric(), "quadratic forms are symmetric");
        QuadExpr { mat }
    }

    /// Symmetrized product of two affine expressions: a(x) * b(x).
    pub fn product(a: &AffExpr, b: &AffExpr) -> Self {
        let n = a.dim();
        assert_eq!(n, b.dim());
        let half = crate::rat::ratio(1, 2);
        let mut m = RMat::zeros(n + 1, n + 1);
        let av: Vec<Rat> = a.coeffs.iter().chain([&a.constant]).cloned().collect();
        let bv: Vec<Rat> = b.coeffs.iter().chain([&b.constant]).cloned().collect();
        for i in 0..=n {
            for j in 0..=n {
                m[(i, j)] = (&av[i] * &bv[j] + &av[j] * &bv[i]) * &half;
            }
        }
        QuadExpr { mat: m }
    }

    pub fn from_affine(a: &AffExpr) -> Self {
        let n = a.dim();
        let half = crate::rat::ratio(1, 2);
        let mut m = RMat::zeros(n + 1, n + 1);
        for i in 0..n {
            m[(i, n)] = &a.coeffs[i] * &half;
            m[(n, i)] = m[(i, n)].clone();
        }
        m[(n, n)] = a.constant.clone();
        QuadExpr { mat: m }
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        let n = self.dim();
        assert_eq!(x.len(), n);
        let mut xbar: Vec<Rat> = x.to_vec();
        xbar.push(Rat::from_integer(1.into()));
        let mx = self.mat.matvec(&xbar);
        xbar.iter().zip(&mx).map(|(a, b)| a * b).sum()
    }

    /// Substitutes x = A y + e; the result is quadratic over y.
    pub fn pullback(&self, a: &RMat, e: &[Rat]) -> QuadExpr {
        let n = self.dim();
        assert_eq!(a.r, n);
        // T maps [y;1] -> [x;1]
        let mut t = RMat::zeros(n + 1, a.c + 1);
        for i in 0..n {
            for j in 0..a.c {
                t[(i, j)] = a[(i, j)].clone();
            }
            t[(i, a.c)] = e[i].clone();
        }
        t[(n, a.c)] = Rat::from_integer(1.into());
        QuadExpr { mat: t.t().matmul(&self.mat).matmul(&t) }
    }

    pub fn embed(&self, new_dim: usize, offset: usize) -> QuadExpr {
        let n = self.dim();
        let mut m = RMat::zeros(new_dim + 1, new_dim + 1);
        for i in 0..=n {
            let ii = if i == n { new_dim } else { offset + i };
            for j in 0..=n {
                let jj = if j == n { new_dim } else { offset + j };
                m[(ii, jj)] = self.mat[(i, j)].clone();
            }
        }
        QuadExpr { mat: m }
    }

    /// Linear part if the form has no genuinely quadratic entries.
    pub fn as_affine(&self) -> Option<AffExpr> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if !self.mat[(i, j)].is_zero() {
                    return None;
                }
            }
        }
        let two = crate::rat::rat(2);
        Some(AffExpr {
            coeffs: (0..n).map(|i| &self.mat[(i, n)] * &two).collect(),
            constant: self.mat[(n, n)].clone(),
        })
    }
}

/// Conjunction of constraints over a fixed-dimension variable vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemialgebraicSet {
    pub dim: usize,
    /// each >= 0
    pub lin_ineq: Vec<AffExpr>,
    /// each == 0
    pub lin_eq: Vec<AffExpr>,
    /// each xbar^T Q xbar >= 0
    pub quad_ineq: Vec<QuadExpr>,
    /// each xbar^T R xbar == 0
    pub quad_eq: Vec<QuadExpr>,
}

impl SemialgebraicSet {
    pub fn universal(dim: usize) -> Self {
        SemialgebraicSet {
            dim,
            lin_ineq: Vec::new(),
            lin_eq: Vec::new(),
            quad_ineq: Vec::new(),
            quad_eq: Vec::new(),
        }
    }

    /// The canonical empty set (0 >= 1).
    pub fn empty(dim: usize) -> Self {
        let mut s = SemialgebraicSet::universal(dim);
        s.lin_ineq.push(AffExpr::constant(dim, crate::rat::rat(-1)));
        s
    }

    pub fn is_universal(&self) -> bool {
        self.lin_ineq.is_empty()
            && self.lin_eq.is_empty()
            && self.quad_ineq.is_empty()
            && self.quad_eq.is_empty()
    }

    pub fn conjoin(&mut self, other: &SemialgebraicSet) {
        assert_eq!(self.dim, other.dim);
        self.lin_ineq.extend(other.lin_ineq.iter().cloned());
        self.lin_eq.extend(other.lin_eq.iter().cloned());
        self.quad_ineq.extend(other.quad_ineq.iter().cloned());
        self.quad_eq.extend(other.quad_eq.iter().cloned());
        self.dedup();
    }

    pub fn dedup(&mut self) {
        self.lin_ineq.retain(|e| !(e.coeffs.iter().all(|c| c.is_zero()) && !e.constant.is_negative()));
        self.lin_eq.retain(|e| !e.is_zero());
        dedup_by_eq(&mut self.lin_ineq);
        dedup_by_eq(&mut self.lin_eq);
        dedup_by_eq(&mut self.quad_ineq);
        dedup_by_eq(&mut self.quad_eq);
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.lin_ineq.iter().all(|e| !e.eval(x).is_negative())
            && self.lin_eq.iter().all(|e| e.eval(x).is_zero())
            && self.quad_ineq.iter().all(|q| !q.eval(x).is_negative())
            && self.quad_eq.iter().all(|q| q.eval(x).is_zero())
    }

    /// Pullback through x = A y + e (quadratic constraints stay quadratic).
    pub fn pullback(&self, a: &RMat, e: &[Rat]) -> SemialgebraicSet {
        SemialgebraicSet {
            dim: a.c,
            lin_ineq: self.lin_ineq.iter().map(|f| f.pullback(a, e)).collect(),
            lin_eq: self.lin_eq.iter().map(|f| f.pullback(a, e)).collect(),
            quad_ineq: self.quad_ineq.iter().map(|q| q.pullback(a, e)).collect(),
            quad_eq: self.quad_eq.iter().map(|q| q.pullback(a, e)).collect(),
        }
    }

    pub fn embed(&self, new_dim: usize, offset: usize) -> SemialgebraicSet {
        SemialgebraicSet {
            dim: new_dim,
            lin_ineq: self.lin_ineq.iter().map(|f| f.embed(new_dim, offset)).collect(),
            lin_eq: self.lin_eq.iter().map(|f| f.embed(new_dim, offset)).collect(),
            quad_ineq: self.quad_ineq.iter().map(|q| q.embed(new_dim, offset)).collect(),
            quad_eq: self.quad_eq.iter().map(|q| q.embed(new_dim, offset)).collect(),
        }
    }

    /// Exact feasibility of the linear part (quadratic constraints ignored,
    /// so `false` certifies emptiness while `true` is only "not obviously
    /// empty").
    pub fn lin_feasible(&self) -> bool {
        if self.lin_ineq.is_empty() && self.lin_eq.is_empty() {
            return true;
        }
        let mut p: LinProg<Rat> = LinProg::new(self.dim);
        for e in &self.lin_ineq {
            p.constrain(e.coeffs.clone(), Cmp::Ge, -e.constant.clone());
        }
        for e in &self.lin_eq {
            p.constrain(e.coeffs.clone(), Cmp::Eq, -e.constant.clone());
        }
        solve(&p).status != LpStatus::Infeasible
    }

    /// Exact Farkas check that `target >= 0` everywhere on the linear part of
    /// the set: finds tau >= 0, rho free, c0 >= 0 with
    /// target = sum tau_i g_i + sum rho_j h_j + c0.
    pub fn implies_nonneg(&self, target: &AffExpr) -> bool {
        assert_eq!(target.dim(), self.dim);
        let g = &self.lin_ineq;
        let h = &self.lin_eq;
        let nv = g.len() + h.len() + 1;
        let mut p: LinProg<Rat> = LinProg::new(nv);
        for (i, b) in p.bounds.iter_mut().enumerate() {
            if i < g.len() || i == nv - 1 {
                *b = (Some(Rat::zero()), None);
            }
        }
        // one equation per variable coefficient plus the constant
        for coord in 0..=self.dim {
            let pick = |e: &AffExpr| {
                if coord < self.dim {
                    e.coeffs[coord].clone()
                } else {
                    e.constant.clone()
                }
            };
            let mut row = Vec::with_capacity(nv);
            for gi in g {
                row.push(pick(gi));
            }
            for hj in h {
                row.push(pick(hj));
            }
            row.push(if coord < self.dim { Rat::zero() } else { Rat::from_integer(1.into()) });
            p.constrain(row, Cmp::Eq, pick(target));
        }
        solve(&p).status == LpStatus::Optimal
    }
}

fn dedup_by_eq<T: PartialEq>(v: &mut Vec<T>) {
    let mut out: Vec<T> = Vec::with_capacity(v.len());
    for item in v.drain(..) {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    *v = out;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn aff(coeffs: &[i64], c: i64) -> AffExpr {
        AffExpr { coeffs: coeffs.iter().map(|&v| rat(v)).collect(), constant: rat(c) }
    }

    #[test]
    fn farkas_implication() {
        // {x >= 1, y - x = 0} implies y >= 0
        let mut s = SemialgebraicSet::universal(2);
        s.lin_ineq.push(aff(&[1, 0], -1));
        s.lin_eq.push(aff(&[-1, 1], 0));
        assert!(s.implies_nonneg(&aff(&[0, 1], 0)));
        assert!(s.implies_nonneg(&aff(&[0, 1], -1))); // y >= 1
        assert!(!s.implies_nonneg(&aff(&[0, 1], -2))); // y >= 2 is false at x=y=1
        assert!(!s.implies_nonneg(&aff(&[0, -1], 0))); // -y >= 0 is false
    }

    #[test]
    fn lin_feasibility() {
        let mut s = SemialgebraicSet::universal(1);
        s.lin_ineq.push(aff(&[1], -1)); // x >= 1
        assert!(s.lin_feasible());
        s.lin_ineq.push(aff(&[-1], 0)); // -x >= 0
        assert!(!s.lin_feasible());
    }

    #[test]
    fn quad_product_and_pullback() {
        // (x-1)(x+1) = x^2 - 1
        let q = QuadExpr::product(&aff(&[1], -1), &aff(&[1], 1));
        assert_eq!(q.eval(&[rat(3)]), rat(8));
        // substitute x = 2y + 1: (2y)(2y+2) = 4y^2 + 4y
        let a = RMat::from_rows(vec![vec![rat(2)]]);
        let p = q.pullback(&a, &[rat(1)]);
        assert_eq!(p.eval(&[rat(1)]), rat(8));
        assert_eq!(p.eval(&[rat(0)]), rat(0));
        assert_eq!(p.eval(&[rat(-1)]), rat(0));
    }

    #[test]
    fn contains_mixed() {
        let mut s = SemialgebraicSet::universal(2);
        s.lin_ineq.push(aff(&[1, 0], 0)); // x >= 0
        s.quad_eq.push(QuadExpr::product(&aff(&[0, 1], -1), &aff(&[0, 1], 1))); // y^2 = 1
        assert!(s.contains(&[rat(2), rat(1)]));
        assert!(s.contains(&[rat(0), rat(-1)]));
        assert!(!s.contains(&[rat(-1), rat(1)]));
        assert!(!s.contains(&[rat(1), rat(0)]));
    }
}
