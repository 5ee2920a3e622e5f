//! Two-phase dense simplex, generic over the scalar field.
//!
//! One implementation serves both lanes required of the toolkit: exact
//! rationals (certificate-grade Farkas/feasibility work, the piecewise-affine
//! encoder's range LPs) and binary64 (bulk randomized testing, cross-checking
//! the exact lane). Bland's rule keeps the exact lane cycle-free; the float
//! lane adds a pivot tolerance.

use crate::rat::Rat;
use num::{Signed, Zero};

pub trait LpScalar: Clone + PartialOrd + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// |x| <= pivot tolerance (exactly zero for rationals)
    fn negligible(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl LpScalar for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        Rat::from_integer(1.into())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn negligible(&self) -> bool {
        self.is_zero()
    }
    fn to_f64(&self) -> f64 {
        crate::rat::rat_to_f64(self)
    }
}

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn negligible(&self) -> bool {
        self.abs() <= 1e-9
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LinProg<S> {
    pub num_vars: usize,
    /// objective coefficients (minimized); empty = pure feasibility
    pub minimize: Vec<S>,
    pub constraints: Vec<(Vec<S>, Cmp, S)>,
    /// per-variable (lower, upper); `None` is unbounded. Defaults to free.
    pub bounds: Vec<(Option<S>, Option<S>)>,
}

impl<S: LpScalar> LinProg<S> {
    pub fn new(num_vars: usize) -> Self {
        LinProg {
            num_vars,
            minimize: Vec::new(),
            constraints: Vec::new(),
            bounds: vec![(None, None); num_vars],
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<S>, cmp: Cmp, rhs: S) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push((coeffs, cmp, rhs));
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpResult<S> {
    pub status: LpStatus,
    pub x: Vec<S>,
    pub objective: S,
}

/// Solves the program; `x` is meaningful only when status is `Optimal`.
pub fn solve<S: LpScalar>(p: &LinProg<S>) -> LpResult<S> {
    // Rewrite into standard form min c.z s.t. Az = b, z >= 0.
    // Free variable -> difference of two nonnegatives; lower bound -> shift;
    // upper bound -> extra row.
    let n = p.num_vars;
    let mut col_of: Vec<(usize, Option<usize>, S)> = Vec::with_capacity(n); // (pos col, neg col, shift)
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(Vec<S>, Cmp, S)> = Vec::new();
    for v in 0..n {
        let (lo, hi) = p.bounds[v].clone();
        match (lo, hi) {
            (Some(l), hi) => {
                col_of.push((ncols, None, l.clone()));
                ncols += 1;
                if let Some(h) = hi {
                    let mut row = vec![S::zero(); n];
                    row[v] = S::one();
                    extra_rows.push((row, Cmp::Le, h));
                }
            }
            (None, Some(h)) => {
                // x = h - z, z >= 0: represent via negated column with shift h
                col_of.push((ncols, None, S::zero()));
                ncols += 1;
                let mut row = vec![S::zero(); n];
                row[v] = S::one();
                extra_rows.push((row, Cmp::Le, h));
                // still free below; add negative part
                col_of[v].1 = Some(ncols);
                ncols += 1;
            }
            (None, None) => {
                col_of.push((ncols, Some(ncols + 1), S::zero()));
                ncols += 2;
            }
        }
    }
    let all_rows: Vec<&(Vec<S>, Cmp, S)> =
        p.constraints.iter().chain(extra_rows.iter()).collect();
    let m = all_rows.len();
    // each Le/Ge row gets a slack column
    let n_slack = all_rows.iter().filter(|(_, c, _)| *c != Cmp::Eq).count();
    let total = ncols + n_slack + m; // + artificials
    let mut tab = vec![vec![S::zero(); total + 1]; m];
    let mut slack_idx = ncols;
    let art0 = ncols + n_slack;
    for (i, (coeffs, cmp, rhs)) in all_rows.iter().enumerate() {
        // substitute shifted/split variables; accumulate rhs adjustment
        let mut b = rhs.clone();
        for v in 0..n {
            let a = &coeffs[v];
            if a.negligible() {
                continue;
            }
            let (cp, cn, shift) = &col_of[v];
            tab[i][*cp] = tab[i][*cp].add(a);
            if let Some(cn) = cn {
                tab[i][*cn] = tab[i][*cn].sub(a);
            }
            b = b.sub(&a.mul(shift));
        }
        match cmp {
            Cmp::Le => {
                tab[i][slack_idx] = S::one();
                slack_idx += 1;
            }
            Cmp::Ge => {
                tab[i][slack_idx] = S::one().neg();
                slack_idx += 1;
            }
            Cmp::Eq => {}
        }
        // normalize to nonnegative rhs, then add artificial
        if b < S::zero() {
            for c in 0..total {
                tab[i][c] = tab[i][c].neg();
            }
        }
        tab[i][total] = if b < S::zero() { b.neg() } else { b };
        tab[i][art0 + i] = S::one();
    }

    let mut basis: Vec<usize> = (0..m).map(|i| art0 + i).collect();

    // phase 1: minimize the sum of artificials. The row maintains
    // W(z) = row[total] - sum_c row[c] z_c modulo the constraint rows, so the
    // artificial (basic) columns start at zero.
    let mut phase1 = vec![S::zero(); total + 1];
    for row in tab.iter() {
        for c in (0..art0).chain(std::iter::once(total)) {
            phase1[c] = phase1[c].add(&row[c]);
        }
    }
    if !run_simplex(&mut tab, &mut basis, &mut phase1, art0) {
        // phase-1 objective is bounded below by 0; unbounded cannot happen
        unreachable!("phase 1 cannot be unbounded");
    }
    if !phase1[total].negligible() {
        return LpResult { status: LpStatus::Infeasible, x: Vec::new(), objective: S::zero() };
    }
    // drive remaining artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= art0 {
            if let Some(c) = (0..art0).find(|&c| !tab[i][c].negligible()) {
                pivot(&mut tab, &mut basis, &mut phase1, i, c);
            }
        }
    }

    // phase 2: the row maintains F(z) = row[total] - sum_c row[c] z_c, so
    // costs enter negated and the constant shift enters positively.
    let mut obj = vec![S::zero(); total + 1];
    if !p.minimize.is_empty() {
        assert_eq!(p.minimize.len(), n);
        for v in 0..n {
            let a = &p.minimize[v];
            if a.negligible() {
                continue;
            }
            let (cp, cn, shift) = &col_of[v];
            obj[*cp] = obj[*cp].sub(a);
            if let Some(cn) = cn {
                obj[*cn] = obj[*cn].add(a);
            }
            obj[total] = obj[total].add(&a.mul(shift));
        }
        // express objective in terms of nonbasic variables
        for i in 0..m {
            let b = basis[i];
            if !obj[b].negligible() {
                let f = obj[b].clone();
                for c in 0..=total {
                    obj[c] = obj[c].sub(&f.mul(&tab[i][c]));
                }
            }
        }
    }
    if !run_simplex(&mut tab, &mut basis, &mut obj, art0) {
        return LpResult { status: LpStatus::Unbounded, x: Vec::new(), objective: S::zero() };
    }

    // read solution back
    let mut z = vec![S::zero(); total];
    for i in 0..m {
        if basis[i] < total {
            z[basis[i]] = tab[i][total].clone();
        }
    }
    let mut x = Vec::with_capacity(n);
    for v in 0..n {
        let (cp, cn, shift) = &col_of[v];
        let mut val = z[*cp].add(shift);
        if let Some(cn) = cn {
            val = val.sub(&z[*cn]);
        }
        x.push(val);
    }
    let mut objective = S::zero();
    for v in 0..n {
        if v < p.minimize.len() {
            objective = objective.add(&p.minimize[v].mul(&x[v]));
        }
    }
    LpResult { status: LpStatus::Optimal, x, objective }
}

/// Bland-rule simplex on the tableau; returns false on unboundedness.
/// Artificial columns (>= art0) are never re-entered.
fn run_simplex<S: LpScalar>(
    tab: &mut [Vec<S>],
    basis: &mut [usize],
    obj: &mut Vec<S>,
    art0: usize,
) -> bool {
    let total = obj.len() - 1;
    loop {
        // entering: first column with positive reduced cost (we keep obj as
        // "row to be zeroed", minimizing obj[total] - sum)
        let Some(e) = (0..art0).find(|&c| {
            let v = &obj[c];
            !v.negligible() && *v > S::zero()
        }) else {
            return true;
        };
        // leaving: min ratio, Bland tie-break on basis index
        let mut leave: Option<(usize, S)> = None;
        for (i, row) in tab.iter().enumerate() {
            let a = &row[e];
            if !a.negligible() && *a > S::zero() {
                let ratio = row[total].div(a);
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && basis[i] < basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((l, _)) = leave else {
            return false; // unbounded improving direction
        };
        pivot(tab, basis, obj, l, e);
    }
}

fn pivot<S: LpScalar>(tab: &mut [Vec<S>], basis: &mut [usize], obj: &mut Vec<S>, l: usize, e: usize) {
    let total = obj.len() - 1;
    let d = tab[l][e].clone();
    for c in 0..=total {
        tab[l][c] = tab[l][c].div(&d);
    }
    for i in 0..tab.len() {
        if i != l && !tab[i][e].negligible() {
            let f = tab[i][e].clone();
            for c in 0..=total {
                let upd = f.mul(&tab[l][c]);
                tab[i][c] = tab[i][c].sub(&upd);
            }
        }
    }
    if !obj[e].negligible() {
        let f = obj[e].clone();
        for c in 0..=total {
            let upd = f.mul(&tab[l][c]);
            obj[c] = obj[c].sub(&upd);
        }
    }
    basis[l] = e;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    #[test]
    fn min_x_subject_x_ge_1() {
        let mut p: LinProg<Rat> = LinProg::new(1);
        p.minimize = vec![rat(1)];
        p.constrain(vec![rat(1)], Cmp::Ge, rat(1));
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.x[0], rat(1));
        assert_eq!(r.objective, rat(1));
    }

    #[test]
    fn box_range_lp() {
        // min x_j - 1 over the unit box: -2 (the encoder's range LP)
        let mut p: LinProg<Rat> = LinProg::new(2);
        p.minimize = vec![rat(0), rat(1)];
        p.bounds = vec![(Some(rat(-1)), Some(rat(1))); 2];
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.x[1], rat(-1));
        // objective reported for x_j, caller subtracts 1
        assert_eq!(r.objective.clone() - rat(1), rat(-2));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p: LinProg<Rat> = LinProg::new(1);
        p.constrain(vec![rat(1)], Cmp::Ge, rat(2));
        p.constrain(vec![rat(1)], Cmp::Le, rat(1));
        assert_eq!(solve(&p).status, LpStatus::Infeasible);

        let mut p: LinProg<Rat> = LinProg::new(1);
        p.minimize = vec![rat(1)];
        p.constrain(vec![rat(1)], Cmp::Le, rat(5));
        assert_eq!(solve(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_with_fractions() {
        // min 3x + 2y s.t. x + y = 1, x,y >= 0 -> y = 1
        let mut p: LinProg<Rat> = LinProg::new(2);
        p.minimize = vec![rat(3), rat(2)];
        p.bounds = vec![(Some(rat(0)), None); 2];
        p.constrain(vec![rat(1), rat(1)], Cmp::Eq, rat(1));
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.x, vec![rat(0), rat(1)]);
        assert_eq!(r.objective, rat(2));
        // fractional data stays exact
        let mut p: LinProg<Rat> = LinProg::new(1);
        p.minimize = vec![rat(1)];
        p.constrain(vec![ratio(2, 3)], Cmp::Ge, ratio(1, 7));
        let r = solve(&p);
        assert_eq!(r.x[0], ratio(3, 14));
    }

    #[test]
    fn float_lane_matches() {
        let mut p: LinProg<f64> = LinProg::new(2);
        p.minimize = vec![-1.0, -1.0];
        p.bounds = vec![(Some(0.0), None); 2];
        p.constrain(vec![1.0, 2.0], Cmp::Le, 4.0);
        p.constrain(vec![3.0, 1.0], Cmp::Le, 6.0);
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - (-2.8)).abs() < 1e-9);
    }
}
