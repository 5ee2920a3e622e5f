//! Dense f64 matrices for the interior-point solver and float-mode checks.
//!
//! Everything here is small and dense (blocks of a few hundred at most), so
//! the implementations favor robustness over asymptotics: cyclic Jacobi for
//! symmetric eigenproblems, unblocked Cholesky, LU with partial pivoting.

#[derive(Clone, PartialEq)]
pub struct Mat {
    pub r: usize,
    pub c: usize,
    pub a: Vec<f64>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.r, self.c)?;
        for i in 0..self.r {
            let row: Vec<String> = (0..self.c).map(|j| format!("{:10.4}", self[(i, j)])).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * self.c + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * self.c + j]
    }
}

impl Mat {
    pub fn zeros(r: usize, c: usize) -> Self {
        Mat { r, c, a: vec![0.0; r * c] }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut a = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            a.extend_from_slice(row);
        }
        Mat { r, c, a }
    }

    pub fn t(&self) -> Mat {
        let mut m = Mat::zeros(self.c, self.r);
        for i in 0..self.r {
            for j in 0..self.c {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.c, other.r, "shape mismatch");
        let mut m = Mat::zeros(self.r, other.c);
        for i in 0..self.r {
            for k in 0..self.c {
                let v = self[(i, k)];
                if v == 0.0 {
                    continue;
                }
                for j in 0..other.c {
                    m[(i, j)] += v * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.c, x.len());
        let mut y = vec![0.0; self.r];
        for i in 0..self.r {
            let mut s = 0.0;
            for j in 0..self.c {
                s += self[(i, j)] * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat { r: self.r, c: self.c, a: self.a.iter().map(|v| v * s).collect() }
    }

    pub fn add_scaled(&mut self, other: &Mat, s: f64) {
        assert_eq!((self.r, self.c), (other.r, other.c));
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += s * y;
        }
    }

    pub fn symmetrize(&mut self) {
        assert_eq!(self.r, self.c);
        for i in 0..self.r {
            for j in (i + 1)..self.c {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn frob(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// <A, B> = trace(A^T B)
    pub fn dot(&self, other: &Mat) -> f64 {
        assert_eq!((self.r, self.c), (other.r, other.c));
        self.a.iter().zip(&other.a).map(|(x, y)| x * y).sum()
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Option<Mat> {
        assert_eq!(self.r, self.c);
        let n = self.r;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Some(l)
    }

    /// Solves L x = b for lower-triangular L.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.r;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= self[(i, k)] * v;
            }
            x[i] /= self[(i, i)];
        }
        x
    }

    /// Solves L^T x = b for lower-triangular L.
    pub fn solve_lower_t(&self, b: &[f64]) -> Vec<f64> {
        let n = self.r;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = x[k];
                x[i] -= self[(k, i)] * v;
            }
            x[i] /= self[(i, i)];
        }
        x
    }

    /// L^{-1} B for lower-triangular L (column-wise forward substitution).
    pub fn solve_lower_mat(&self, b: &Mat) -> Mat {
        let mut out = Mat::zeros(b.r, b.c);
        for j in 0..b.c {
            let col: Vec<f64> = (0..b.r).map(|i| b[(i, j)]).collect();
            let x = self.solve_lower(&col);
            for i in 0..b.r {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    /// Solves A x = b by LU with partial pivoting. Returns None if singular
    /// to working precision.
    pub fn lu_solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(self.r, self.c);
        let n = self.r;
        let mut a = self.a.clone();
        let mut x = b.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut imax, mut vmax) = (k, 0.0);
            for i in k..n {
                let v = a[piv[i] * n + k].abs();
                if v > vmax {
                    vmax = v;
                    imax = i;
                }
            }
            if vmax < 1e-300 {
                return None;
            }
            piv.swap(k, imax);
            let pk = piv[k];
            for i in (k + 1)..n {
                let pi = piv[i];
                let f = a[pi * n + k] / a[pk * n + k];
                a[pi * n + k] = f;
                for j in (k + 1)..n {
                    a[pi * n + j] -= f * a[pk * n + j];
                }
                x[pi] -= f * x[pk];
            }
        }
        let mut out = vec![0.0; n];
        for i in (0..n).rev() {
            let pi = piv[i];
            let mut s = x[pi];
            for j in (i + 1)..n {
                s -= a[pi * n + j] * out[j];
            }
            out[i] = s / a[pi * n + i];
        }
        Some(out)
    }

    /// Eigendecomposition of a symmetric matrix by cyclic Jacobi.
    /// Returns (eigenvalues ascending, V with columns = eigenvectors).
    pub fn sym_eigen(&self) -> (Vec<f64>, Mat) {
        assert_eq!(self.r, self.c);
        let n = self.r;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Mat::eye(n);
        let scale = a.max_abs().max(1e-300);
        for _sweep in 0..60 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= 1e-14 * scale * (n as f64) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        idx.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
        let vals: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
        let mut vec_sorted = Mat::zeros(n, n);
        for (new_j, &old_j) in idx.iter().enumerate() {
            for i in 0..n {
                vec_sorted[(i, new_j)] = v[(i, old_j)];
            }
        }
        (vals, vec_sorted)
    }

    pub fn min_eig(&self) -> f64 {
        if self.r == 0 {
            return 0.0;
        }
        self.sym_eigen().0[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_spectrum() {
        // A = Q diag(1,2,5) Q^T for a known rotation
        let q = Mat::from_rows(&[
            vec![0.6, 0.8, 0.0],
            vec![-0.8, 0.6, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let d = Mat::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 5.0],
        ]);
        let a = q.matmul(&d).matmul(&q.t());
        let (vals, vecs) = a.sym_eigen();
        assert!((vals[0] - 1.0).abs() < 1e-10);
        assert!((vals[1] - 2.0).abs() < 1e-10);
        assert!((vals[2] - 5.0).abs() < 1e-10);
        // A V = V diag(vals)
        let av = a.matmul(&vecs);
        for j in 0..3 {
            for i in 0..3 {
                assert!((av[(i, j)] - vals[j] * vecs[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cholesky_and_solves() {
        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let l = a.cholesky().unwrap();
        let lt = l.matmul(&l.t());
        assert!((lt.a[0] - 4.0).abs() < 1e-12);
        let x = a.lu_solve(&[8.0, 7.0]).unwrap();
        assert!((x[0] - 1.25).abs() < 1e-12);
        assert!((x[1] - 1.5).abs() < 1e-12);
        let not_pd = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(not_pd.cholesky().is_none());
    }
}
