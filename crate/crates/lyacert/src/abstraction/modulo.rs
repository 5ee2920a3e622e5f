//! Binary-selector envelope of integer remainder: for t in [0, M*s),
//! mod(t, s) is contained in { t - (s/2) * sum(1 + v_k) : (t - k s) v_k >= 0 }
//! over selectors v_1..v_{M-1}.

use super::nonlinear::AbsError;
use crate::model::semialg::{AffExpr, QuadExpr, SemialgebraicSet};
use crate::model::types::TransitionLabel;
use crate::rat::{rat, ratio, Rat};
use crate::rlinalg::RMat;
use num::{One, Signed};

/// Builds the remainder relation for arguments in `[t_lo, t_hi]` subseteq
/// [0, pieces*s). The label has one input (t), no w, and pieces-1 binary
/// selectors.
pub fn abstract_mod(
    t_range: (Rat, Rat),
    s: i64,
    pieces: u32,
) -> Result<TransitionLabel, AbsError> {
    if s <= 0 {
        return Err(AbsError::BadModulus);
    }
    let (lo, hi) = t_range;
    let upper = rat(s) * rat(pieces as i64);
    if lo.is_negative() || hi >= upper || lo > hi {
        return Err(AbsError::BadModRange(
            crate::rat::rat_to_f64(&lo),
            crate::rat::rat_to_f64(&hi),
        ));
    }
    let m = pieces as usize;
    let n_v = m.saturating_sub(1);
    // out = t - (s/2) * sum_k v_k - (M-1) s / 2
    let half_s = ratio(s, 2);
    let c = RMat::from_rows(vec![vec![-half_s.clone(); n_v]]);
    let e = vec![-half_s.clone() * rat(n_v as i64)];
    // constraints over (t, v_1..v_{M-1}): (t - k s) v_k >= 0
    let dim = 1 + n_v;
    let mut constraint = SemialgebraicSet::universal(dim);
    for k in 1..=n_v {
        let mut t_minus_ks = AffExpr::zero(dim);
        t_minus_ks.coeffs[0] = Rat::one();
        t_minus_ks.constant = -rat(k as i64 * s);
        let vk = AffExpr::var(dim, k);
        constraint.quad_ineq.push(QuadExpr::product(&t_minus_ks, &vk));
    }
    Ok(TransitionLabel {
        a: RMat::eye(1),
        b: RMat::zeros(1, 0),
        c,
        e,
        constraint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn concrete_mod(t: i64, s: i64) -> i64 {
        t - (t.div_euclid(s)) * s
    }

    /// all admissible selector values for integer t
    fn outputs(label: &TransitionLabel, t: i64) -> Vec<Rat> {
        let n_v = label.n_v();
        let mut out = Vec::new();
        for bits in 0..(1u32 << n_v) {
            let v: Vec<Rat> = (0..n_v)
                .map(|i| if bits >> i & 1 == 1 { rat(1) } else { rat(-1) })
                .collect();
            let mut point = vec![rat(t)];
            point.extend(v.iter().cloned());
            if label.constraint.contains(&point) {
                out.push(label.apply(&[rat(t)], &[], &v)[0].clone());
            }
        }
        out
    }

    #[test]
    fn two_piece_relation_contains_mod() {
        let s = 5;
        let label = abstract_mod((rat(0), rat(2 * s - 1)), s, 2).unwrap();
        assert_eq!(label.n_v(), 1);
        for t in 0..(2 * s) {
            let exact = rat(concrete_mod(t, s));
            let outs = outputs(&label, t);
            assert!(outs.contains(&exact), "t = {t}: {outs:?} vs {exact}");
            if t < s {
                // below the breakpoint the selector is forced to the identity branch
                assert_eq!(outs, vec![rat(t)]);
            }
        }
    }

    #[test]
    fn single_piece_is_identity() {
        let label = abstract_mod((rat(0), rat(4)), 5, 1).unwrap();
        assert_eq!(label.n_v(), 0);
        for t in 0..5 {
            assert_eq!(outputs(&label, t), vec![rat(t)]);
        }
    }

    #[test]
    fn summation_range_needs_2m_minus_1_selectors() {
        // t1 + t2 in [0, 2 M s): 2M - 1 selectors at M = 3
        let s = 4;
        let label = abstract_mod((rat(0), rat(6 * s - 1)), s, 6).unwrap();
        assert_eq!(label.n_v(), 5);
        for t in 0..(6 * s) {
            let exact = rat(concrete_mod(t, s));
            assert!(outputs(&label, t).contains(&exact), "t = {t}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(abstract_mod((rat(0), rat(3)), 0, 2).is_err());
        assert!(abstract_mod((rat(-1), rat(3)), 5, 2).is_err());
        assert!(abstract_mod((rat(0), rat(10)), 5, 2).is_err());
    }
}
