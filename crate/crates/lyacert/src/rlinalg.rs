//! Exact rational matrices: model data, graph reduction, and the exact side
//! of certificate checking (PSD tests by symmetric elimination, no floating
//! point anywhere).

use crate::linalg::Mat;
use crate::rat::{rat_to_f64, Rat};
use num::{Signed, Zero};

#[derive(Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RMat {
    pub r: usize,
    pub c: usize,
    pub a: Vec<Rat>,
}

impl std::fmt::Debug for RMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "RMat {}x{} [", self.r, self.c)?;
        for i in 0..self.r {
            let row: Vec<String> = (0..self.c).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for RMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.a[i * self.c + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.a[i * self.c + j]
    }
}

impl RMat {
    pub fn zeros(r: usize, c: usize) -> Self {
        RMat { r, c, a: vec![Rat::zero(); r * c] }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = RMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::from_integer(1.into());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut a = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            a.extend(row);
        }
        RMat { r, c, a }
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.a[i * self.c..(i + 1) * self.c]
    }

    pub fn t(&self) -> RMat {
        let mut m = RMat::zeros(self.c, self.r);
        for i in 0..self.r {
            for j in 0..self.c {
                m[(j, i)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn matmul(&self, other: &RMat) -> RMat {
        assert_eq!(self.c, other.r, "shape mismatch");
        let mut m = RMat::zeros(self.r, other.c);
        for i in 0..self.r {
            for k in 0..self.c {
                let v = &self[(i, k)];
                if v.is_zero() {
                    continue;
                }
                for j in 0..other.c {
                    if !other[(k, j)].is_zero() {
                        let add = v * &other[(k, j)];
                        m[(i, j)] += add;
                    }
                }
            }
        }
        m
    }

    pub fn matvec(&self, x: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.c, x.len());
        (0..self.r)
            .map(|i| {
                let mut s = Rat::zero();
                for j in 0..self.c {
                    if !self[(i, j)].is_zero() {
                        s += &self[(i, j)] * &x[j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn add(&self, other: &RMat) -> RMat {
        assert_eq!((self.r, self.c), (other.r, other.c));
        RMat {
            r: self.r,
            c: self.c,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, other: &RMat) -> RMat {
        assert_eq!((self.r, self.c), (other.r, other.c));
        RMat {
            r: self.r,
            c: self.c,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn scaled(&self, s: &Rat) -> RMat {
        RMat { r: self.r, c: self.c, a: self.a.iter().map(|v| v * s).collect() }
    }

    pub fn to_f64(&self) -> Mat {
        Mat { r: self.r, c: self.c, a: self.a.iter().map(rat_to_f64).collect() }
    }

    pub fn is_symmetric(&self) -> bool {
        if self.r != self.c {
            return false;
        }
        for i in 0..self.r {
            for j in (i + 1)..self.c {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    /// Exact positive-semidefiniteness test by symmetric Gaussian elimination
    /// with diagonal pivoting: a symmetric M is PSD iff at every step some
    /// nonzero diagonal pivot is positive and rows with a zero diagonal entry
    /// vanish entirely.
    pub fn is_psd(&self) -> bool {
        assert!(self.is_symmetric(), "PSD test needs a symmetric matrix");
        let mut m = self.clone();
        let n = m.r;
        let mut active: Vec<usize> = (0..n).collect();
        while !active.is_empty() {
            // pick the largest positive diagonal pivot among active rows
            let mut pivot: Option<usize> = None;
            for &i in &active {
                if m[(i, i)].is_positive() {
                    pivot = match pivot {
                        Some(p) if m[(p, p)] >= m[(i, i)] => Some(p),
                        _ => Some(i),
                    };
                }
            }
            match pivot {
                Some(p) => {
                    let d = m[(p, p)].clone();
                    active.retain(|&i| i != p);
                    for idx in 0..active.len() {
                        let i = active[idx];
                        if m[(i, p)].is_zero() {
                            continue;
                        }
                        let f = &m[(i, p)] / &d;
                        for jdx in idx..active.len() {
                            let j = active[jdx];
                            let upd = &f * &m[(p, j)];
                            m[(i, j)] -= &upd;
                            if i != j {
                                let v = m[(i, j)].clone();
                                m[(j, i)] = v;
                            }
                        }
                    }
                }
                None => {
                    // all active diagonal entries are <= 0: PSD requires all
                    // of them zero with fully zero active rows
                    for &i in &active {
                        if m[(i, i)].is_negative() {
                            return false;
                        }
                        for &j in &active {
                            if !m[(i, j)].is_zero() {
                                return false;
                            }
                        }
                    }
                    return true;
                }
            }
        }
        true
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.c {
            if row >= self.r {
                break;
            }
            let Some(p) = (row..self.r).find(|&i| !self[(i, col)].is_zero()) else {
                continue;
            };
            for j in 0..self.c {
                let tmp = self[(row, j)].clone();
                self[(row, j)] = self[(p, j)].clone();
                self[(p, j)] = tmp;
            }
            let d = self[(row, col)].clone();
            for j in 0..self.c {
                self[(row, j)] = &self[(row, j)] / &d;
            }
            for i in 0..self.r {
                if i != row && !self[(i, col)].is_zero() {
                    let f = self[(i, col)].clone();
                    for j in 0..self.c {
                        let upd = &f * &self[(row, j)];
                        self[(i, j)] -= upd;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Exact inverse of a square matrix, if nonsingular.
    pub fn inverse(&self) -> Option<RMat> {
        assert_eq!(self.r, self.c);
        let n = self.r;
        let mut aug = RMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rat::from_integer(1.into());
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots.iter().enumerate().any(|(k, &p)| p != k) {
            return None;
        }
        let mut inv = RMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    /// One exact solution of `self * x = b`, if consistent (minimal support
    /// via free variables set to zero).
    pub fn solve_any(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(self.r, b.len());
        let mut aug = RMat::zeros(self.r, self.c + 1);
        for i in 0..self.r {
            for j in 0..self.c {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.c)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.contains(&self.c) {
            return None; // inconsistent
        }
        let mut x = vec![Rat::zero(); self.c];
        for (row, &col) in pivots.iter().enumerate() {
            x[col] = aug[(row, self.c)].clone();
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    #[test]
    fn psd_test_exact() {
        let psd = RMat::from_rows(vec![
            vec![rat(2), rat(1)],
            vec![rat(1), rat(1)],
        ]);
        assert!(psd.is_psd());
        let semi = RMat::from_rows(vec![
            vec![rat(1), rat(1)],
            vec![rat(1), rat(1)],
        ]);
        assert!(semi.is_psd());
        let not = RMat::from_rows(vec![
            vec![rat(1), rat(2)],
            vec![rat(2), rat(1)],
        ]);
        assert!(!not.is_psd());
        // zero diagonal with nonzero off-diagonal is not PSD
        let hollow = RMat::from_rows(vec![
            vec![rat(0), rat(1)],
            vec![rat(1), rat(0)],
        ]);
        assert!(!hollow.is_psd());
        assert!(RMat::zeros(3, 3).is_psd());
    }

    #[test]
    fn inverse_and_solve() {
        let a = RMat::from_rows(vec![
            vec![rat(2), rat(1)],
            vec![rat(1), rat(1)],
        ]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv[(0, 0)], rat(1));
        assert_eq!(inv[(0, 1)], rat(-1));
        let x = a.solve_any(&[rat(3), rat(2)]).unwrap();
        assert_eq!(x, vec![rat(1), rat(1)]);
        let singular = RMat::from_rows(vec![
            vec![rat(1), rat(2)],
            vec![rat(2), rat(4)],
        ]);
        assert!(singular.inverse().is_none());
        assert!(singular.solve_any(&[rat(1), rat(3)]).is_none());
        let x = singular.solve_any(&[rat(1), rat(2)]).unwrap();
        assert_eq!(x, vec![rat(1), ratio(0, 1)]);
    }
}
