//! Constructive encoding of piecewise-affine maps as mixed-integer linear
//! models: f(x) in 2 A_i x + 2 B_i on polytopic pieces X_i = { S_i x <= s_i }
//! becomes a pair (F, H) whose solution graph equals the graph of f.
//!
//! Per piece i, with one binary v_i selecting it (sum v_i = -N + 2 forces
//! exactly one +1), the constraints linearize u_i = x * v_i through bounded
//! auxiliaries zlo_i, zhi_i, wlo_i, whi_i and slacks w_i on the piece rows,
//! whose tight ranges R_ij = min_{X_i} (S_ij x - s_ij) come from exact LPs.

use crate::model::types::{Milm, MilmBlock, MilmInit};
use crate::rat::{rat, Rat};
use crate::rlinalg::RMat;
use crate::solver::lp::{solve, Cmp, LinProg, LpStatus};
use num::{One, Zero};

#[derive(Clone, Debug)]
pub struct PwaPiece {
    /// half-slope: f(x) = 2 a x + 2 b on this piece
    pub a: RMat,
    pub b: Vec<Rat>,
    /// polytope rows S x <= s
    pub s_mat: RMat,
    pub s_vec: Vec<Rat>,
}

#[derive(Clone, Debug)]
pub struct PwaFunction {
    pub dim: usize,
    pub pieces: Vec<PwaPiece>,
}

#[derive(Debug, thiserror::Error)]
pub enum PwaError {
    #[error("piece {0} is empty: its range LP is infeasible")]
    EmptyPiece(usize),
    #[error("piece {0} is unbounded outside the unit box")]
    UnboundedPiece(usize),
    #[error("piece {0} has inconsistent shapes")]
    Shape(usize),
}

/// min (S_ij x - s_ij) over X_i intersected with the unit box (pieces live in
/// [-1,1]^n by assumption).
fn range_lp(piece: &PwaPiece, row: usize, dim: usize) -> Result<Rat, PwaError> {
    let mut p: LinProg<Rat> = LinProg::new(dim);
    p.minimize = (0..dim).map(|j| piece.s_mat[(row, j)].clone()).collect();
    p.bounds = vec![(Some(rat(-1)), Some(rat(1))); dim];
    for r in 0..piece.s_mat.r {
        let coeffs: Vec<Rat> = (0..dim).map(|j| piece.s_mat[(r, j)].clone()).collect();
        p.constrain(coeffs, Cmp::Le, piece.s_vec[r].clone());
    }
    let res = solve(&p);
    match res.status {
        LpStatus::Optimal => Ok(res.objective - piece.s_vec[row].clone()),
        LpStatus::Infeasible => Err(PwaError::EmptyPiece(row)),
        LpStatus::Unbounded => Err(PwaError::UnboundedPiece(row)),
    }
}

/// Checks the piece polytope itself (without the box) is bounded.
fn check_bounded(piece: &PwaPiece, idx: usize, dim: usize) -> Result<(), PwaError> {
    for j in 0..dim {
        for sign in [1i64, -1] {
            let mut p: LinProg<Rat> = LinProg::new(dim);
            p.minimize = (0..dim).map(|c| if c == j { rat(sign) } else { Rat::zero() }).collect();
            for r in 0..piece.s_mat.r {
                let coeffs: Vec<Rat> = (0..dim).map(|c| piece.s_mat[(r, c)].clone()).collect();
                p.constrain(coeffs, Cmp::Le, piece.s_vec[r].clone());
            }
            match solve(&p).status {
                LpStatus::Unbounded => return Err(PwaError::UnboundedPiece(idx)),
                LpStatus::Infeasible => return Err(PwaError::EmptyPiece(idx)),
                LpStatus::Optimal => {}
            }
        }
    }
    Ok(())
}

/// Builds the exact MILM S(F, H, n, n_w, n_v) whose transition graph equals
/// the graph of `f`.
pub fn pwa_to_milm(f: &PwaFunction) -> Result<Milm, PwaError> {
    let n = f.dim;
    let npieces = f.pieces.len();
    for (i, piece) in f.pieces.iter().enumerate() {
        if piece.a.r != n || piece.a.c != n || piece.b.len() != n || piece.s_mat.c != n {
            return Err(PwaError::Shape(i));
        }
        if piece.s_mat.r != piece.s_vec.len() {
            return Err(PwaError::Shape(i));
        }
        check_bounded(piece, i, n)?;
    }

    // ranges R_i = diag{ min (S_ij x - s_ij) } per piece, by exact LP
    let mut ranges: Vec<Vec<Rat>> = Vec::with_capacity(npieces);
    for piece in &f.pieces {
        let mut r = Vec::with_capacity(piece.s_mat.r);
        for row in 0..piece.s_mat.r {
            r.push(range_lp(piece, row, n)?);
        }
        ranges.push(r);
    }

    // layout of the uncertainty vector w:
    //   per piece: [w_i (rows_i) | zlo_i (n) | zhi_i (n) | wlo_i (n) | whi_i (n)]
    let rows: Vec<usize> = f.pieces.iter().map(|p| p.s_mat.r).collect();
    let per_piece: Vec<usize> = rows.iter().map(|r| r + 4 * n).collect();
    let n_w: usize = per_piece.iter().sum();
    let n_v = npieces;
    let n_e = n + n_w + n_v + 1;
    let piece_off: Vec<usize> = per_piece
        .iter()
        .scan(0usize, |acc, len| {
            let off = *acc;
            *acc += len;
            Some(off)
        })
        .collect();
    let w_col = |piece: usize, slot: usize| n + piece_off[piece] + slot;
    let v_col = |piece: usize| n + n_w + piece;
    let const_col = n_e - 1;

    // H rows per piece:
    //   (r1) rows_i: 2 S_i zlo_i - (S_i 1 + s_i) v_i - R_i w_i + (S_i 1 - s_i - R_i 1) = 0
    //   (r2) n: x - zlo_i - zhi_i - 1 = 0
    //   (r3) n: zlo_i - wlo_i - v_i 1 + 1 = 0
    //   (r4) n: zhi_i - whi_i + v_i 1 + 1 = 0
    // plus the global selection row sum v_i + N - 2 = 0.
    let n_h: usize = rows.iter().map(|r| r + 3 * n).sum::<usize>() + 1;
    let mut h = RMat::zeros(n_h, n_e);
    let mut hrow = 0usize;
    for (i, piece) in f.pieces.iter().enumerate() {
        let zlo = |c: usize| w_col(i, rows[i] + c);
        let zhi = |c: usize| w_col(i, rows[i] + n + c);
        let wlo = |c: usize| w_col(i, rows[i] + 2 * n + c);
        let whi = |c: usize| w_col(i, rows[i] + 3 * n + c);
        for r in 0..rows[i] {
            let s_row_sum: Rat = (0..n).map(|j| piece.s_mat[(r, j)].clone()).sum();
            for j in 0..n {
                h[(hrow, zlo(j))] = rat(2) * piece.s_mat[(r, j)].clone();
            }
            h[(hrow, v_col(i))] = -(s_row_sum.clone() + piece.s_vec[r].clone());
            h[(hrow, w_col(i, r))] = -ranges[i][r].clone();
            h[(hrow, const_col)] = s_row_sum - piece.s_vec[r].clone() - ranges[i][r].clone();
            hrow += 1;
        }
        for j in 0..n {
            h[(hrow, j)] = Rat::one();
            h[(hrow, zlo(j))] = -Rat::one();
            h[(hrow, zhi(j))] = -Rat::one();
            h[(hrow, const_col)] = -Rat::one();
            hrow += 1;
        }
        for j in 0..n {
            h[(hrow, zlo(j))] = Rat::one();
            h[(hrow, wlo(j))] = -Rat::one();
            h[(hrow, v_col(i))] = -Rat::one();
            h[(hrow, const_col)] = Rat::one();
            hrow += 1;
        }
        for j in 0..n {
            h[(hrow, zhi(j))] = Rat::one();
            h[(hrow, whi(j))] = -Rat::one();
            h[(hrow, v_col(i))] = Rat::one();
            h[(hrow, const_col)] = Rat::one();
            hrow += 1;
        }
    }
    for i in 0..npieces {
        h[(hrow, v_col(i))] = Rat::one();
    }
    h[(hrow, const_col)] = rat(npieces as i64) - rat(2);
    hrow += 1;
    debug_assert_eq!(hrow, n_h);

    // F rows: y = sum_i ( 2 A_i zlo_i + (B_i - A_i 1) v_i + (A_i 1 + B_i) )
    let mut fmat = RMat::zeros(n, n_e);
    for (i, piece) in f.pieces.iter().enumerate() {
        let zlo = |c: usize| w_col(i, rows[i] + c);
        for out in 0..n {
            let a_row_sum: Rat = (0..n).map(|j| piece.a[(out, j)].clone()).sum();
            for j in 0..n {
                let cur = fmat[(out, zlo(j))].clone();
                fmat[(out, zlo(j))] = cur + rat(2) * piece.a[(out, j)].clone();
            }
            let cur = fmat[(out, v_col(i))].clone();
            fmat[(out, v_col(i))] = cur + piece.b[out].clone() - a_row_sum.clone();
            let cur = fmat[(out, const_col)].clone();
            fmat[(out, const_col)] = cur + a_row_sum + piece.b[out].clone();
        }
    }

    Ok(Milm {
        vars: (0..n).map(|i| format!("x{i}")).collect(),
        block: MilmBlock { f: fmat, h, n, n_w, n_v },
        init: MilmInit::States(vec![vec![Rat::zero(); n]]),
        scale: Rat::one(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;
    use crate::solver::lp::{solve, Cmp, LinProg, LpStatus};

    /// Brute-force evaluation of the MILM graph at x: all v vertices, exact
    /// LP feasibility over w, collecting the (unique per piece) output.
    pub(super) fn milm_outputs(m: &Milm, x: &[Rat]) -> Vec<Vec<Rat>> {
        let b = &m.block;
        let mut outs: Vec<Vec<Rat>> = Vec::new();
        for bits in 0..(1u32 << b.n_v) {
            let v: Vec<Rat> = (0..b.n_v)
                .map(|i| if bits >> i & 1 == 1 { rat(1) } else { rat(-1) })
                .collect();
            // fix (x, v); find w in the box with H x_e = 0; output F x_e.
            // outputs depend on w only through pinned coordinates, so one
            // feasible w suffices per piece-selection.
            let mut p: LinProg<Rat> = LinProg::new(b.n_w);
            p.bounds = vec![(Some(rat(-1)), Some(rat(1))); b.n_w];
            for r in 0..b.h.r {
                let row = b.h.row(r);
                let mut lhs = row[b.n_e() - 1].clone();
                for (i, xi) in x.iter().enumerate() {
                    lhs += &row[i] * xi;
                }
                for (i, vi) in v.iter().enumerate() {
                    lhs += &row[b.n + b.n_w + i] * vi;
                }
                p.constrain((0..b.n_w).map(|i| row[b.n + i].clone()).collect(), Cmp::Eq, -lhs);
            }
            let r = solve(&p);
            if r.status == LpStatus::Optimal {
                let xe = b.extended(x, &r.x, &v);
                let y = b.f.matvec(&xe);
                if !outs.contains(&y) {
                    outs.push(y);
                }
            }
        }
        outs
    }

    #[test]
    fn single_piece_forces_selector() {
        // f(x) = 2*(1/2)x + 2*(1/4) = x + 1/2 on [-1,1]
        let f = PwaFunction {
            dim: 1,
            pieces: vec![PwaPiece {
                a: RMat::from_rows(vec![vec![ratio(1, 2)]]),
                b: vec![ratio(1, 4)],
                s_mat: RMat::from_rows(vec![vec![rat(1)], vec![rat(-1)]]),
                s_vec: vec![rat(1), rat(1)],
            }],
        };
        let m = pwa_to_milm(&f).unwrap();
        assert_eq!(m.block.n_v, 1);
        // sum v = -N + 2 = 1 forces v1 = 1
        for xi in [-1i64, 0, 1] {
            let outs = milm_outputs(&m, &[rat(xi)]);
            assert_eq!(outs, vec![vec![rat(xi) + ratio(1, 2)]]);
        }
    }

    #[test]
    fn abs_like_two_pieces_match_on_grid() {
        // f(x) = |x| on [-1,0] u [0,1]: pieces 2*(-1/2)x and 2*(1/2)x
        let f = PwaFunction {
            dim: 1,
            pieces: vec![
                PwaPiece {
                    a: RMat::from_rows(vec![vec![ratio(-1, 2)]]),
                    b: vec![Rat::zero()],
                    s_mat: RMat::from_rows(vec![vec![rat(1)], vec![rat(-1)]]),
                    s_vec: vec![rat(0), rat(1)],
                },
                PwaPiece {
                    a: RMat::from_rows(vec![vec![ratio(1, 2)]]),
                    b: vec![Rat::zero()],
                    s_mat: RMat::from_rows(vec![vec![rat(1)], vec![rat(-1)]]),
                    s_vec: vec![rat(1), rat(0)],
                },
            ],
        };
        let m = pwa_to_milm(&f).unwrap();
        for i in -50..=50i64 {
            let x = ratio(i, 50);
            let outs = milm_outputs(&m, &[x.clone()]);
            let expect = vec![num::Signed::abs(&x)];
            assert!(outs.contains(&expect), "x = {x}: {outs:?}");
            // away from the breakpoint the output is unique
            if i != 0 {
                assert_eq!(outs.len(), 1, "x = {x}: {outs:?}");
            }
        }
    }

    #[test]
    fn empty_piece_is_rejected() {
        let f = PwaFunction {
            dim: 1,
            pieces: vec![PwaPiece {
                a: RMat::from_rows(vec![vec![rat(1)]]),
                b: vec![Rat::zero()],
                // x <= -2 and x >= 2: empty
                s_mat: RMat::from_rows(vec![vec![rat(1)], vec![rat(-1)]]),
                s_vec: vec![rat(-2), rat(-2)],
            }],
        };
        assert!(matches!(pwa_to_milm(&f), Err(PwaError::EmptyPiece(_))));
    }

    #[test]
    fn unbounded_piece_is_rejected() {
        let f = PwaFunction {
            dim: 1,
            pieces: vec![PwaPiece {
                a: RMat::from_rows(vec![vec![rat(1)]]),
                b: vec![Rat::zero()],
                s_mat: RMat::from_rows(vec![vec![rat(1)]]), // x <= 1 only
                s_vec: vec![rat(1)],
            }],
        };
        assert!(matches!(pwa_to_milm(&f), Err(PwaError::UnboundedPiece(_))));
    }
}
