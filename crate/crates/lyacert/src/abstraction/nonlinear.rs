//! Set-valued envelopes for the nonlinear intrinsics: truncated series plus
//! a bounded error term for trig functions, binary-selector encodings for
//! sign/abs, and a piecewise-linear sine over [0, pi/2].
//!
//! Every returned relation contains the exact function graph on its domain;
//! error radii are endpoint suprema (the error curves are monotone in |x|)
//! ceiling-rounded to three decimals so the printed constant is itself sound.

use crate::model::semialg::{AffExpr, QuadExpr, SemialgebraicSet};
use crate::model::types::TransitionLabel;
use crate::rat::{ceil_dp, parse_rat, rat, rat_to_f64, ratio, Rat};
use crate::rlinalg::RMat;
use num::Zero;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Sin,
    Cos,
    Sign,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Linear,
    Cubic,
    Pwl,
}

/// A one-variable relation fragment: output contained in
/// { poly(x) + radius*w + (selector terms) } on the stated domain. For
/// linear orders the fragment also carries a spliceable affine label with one
/// input state variable.
#[derive(Clone, Debug)]
pub struct Fragment {
    /// polynomial approximation coefficients, constant first (degree <= 3)
    pub poly: Vec<Rat>,
    /// bounded-error radius `a`
    pub radius: Rat,
    pub domain: (Rat, Rat),
    /// affine transition form when the fragment is degree <= 1 in x
    pub label: Option<TransitionLabel>,
}

#[derive(Debug, thiserror::Error)]
pub enum AbsError {
    #[error("domain [{0}, {1}] is outside the tabulated range [-{2}, {2}]")]
    DomainOutOfRange(f64, f64, f64),
    #[error("domain [{0}, {1}] is empty")]
    EmptyDomain(f64, f64),
    #[error("the piecewise-linear sine encoding is tabulated on [0, pi/2] only")]
    PwlDomain,
    #[error("modulus must be a positive integer")]
    BadModulus,
    #[error("argument range [{0}, {1}] must sit inside [0, modulus * pieces)")]
    BadModRange(f64, f64),
}

/// Rational upper bound on pi (355/113 > pi), the outer limit of the
/// tabulated trig domains.
pub fn pi_upper() -> Rat {
    ratio(355, 113)
}

/// Rational just above pi/2.
pub fn half_pi_upper() -> Rat {
    ratio(15708, 10000)
}

fn sin_err_linear(x: f64) -> f64 {
    (x - x.sin()).abs()
}

fn sin_err_cubic(x: f64) -> f64 {
    (x.sin() - (x - x * x * x / 6.0)).abs()
}

fn cos_err_linear(x: f64) -> f64 {
    (1.0 - x.cos()).abs()
}

fn cos_err_cubic(x: f64) -> f64 {
    (x.cos() - (1.0 - x * x / 2.0)).abs()
}

/// Builds the bounded-error envelope for a trig truncation. The error
/// magnitude is monotone in |x| for all four truncations (their derivatives
/// are sign-definite), so the supremum sits at an endpoint; a 1e-9 guard
/// plus upward 3-decimal rounding absorbs the f64 evaluation error.
fn trig_radius(err: impl Fn(f64) -> f64, lo: &Rat, hi: &Rat) -> Rat {
    let (lo_f, hi_f) = (rat_to_f64(lo), rat_to_f64(hi));
    let sup = err(lo_f).max(err(hi_f));
    if sup == 0.0 {
        // the error curves vanish only at the origin, so a point domain at 0
        // is exact
        return Rat::zero();
    }
    parse_rat(&format!("{:.3}", ceil_dp(sup + 1e-9, 3))).expect("formatted decimal")
}

/// One-variable label: out = c1 * x + c0 + radius * w.
fn affine_label(c1: Rat, c0: Rat, radius: Rat) -> TransitionLabel {
    let has_w = !radius.is_zero();
    TransitionLabel {
        a: RMat::from_rows(vec![vec![c1]]),
        b: if has_w {
            RMat::from_rows(vec![vec![radius]])
        } else {
            RMat::zeros(1, 0)
        },
        c: RMat::zeros(1, 0),
        e: vec![c0],
        constraint: SemialgebraicSet::universal(1 + usize::from(has_w)),
    }
}

/// Envelope of sin/cos/sign/abs on the domain. `sign` and `abs` ignore the
/// order; `abs` requires the domain inside [-1, 1] (the exact encoding).
pub fn abstract_nonlinearity(
    kind: Kind,
    domain: (Rat, Rat),
    order: Order,
) -> Result<Fragment, AbsError> {
    let (lo, hi) = domain.clone();
    if lo > hi {
        return Err(AbsError::EmptyDomain(rat_to_f64(&lo), rat_to_f64(&hi)));
    }
    match kind {
        Kind::Sin | Kind::Cos => {
            let limit = pi_upper();
            if lo < -limit.clone() || hi > limit.clone() {
                return Err(AbsError::DomainOutOfRange(
                    rat_to_f64(&lo),
                    rat_to_f64(&hi),
                    rat_to_f64(&limit),
                ));
            }
            match (kind, order) {
                (Kind::Sin, Order::Linear) => {
                    let radius = trig_radius(sin_err_linear, &lo, &hi);
                    Ok(Fragment {
                        poly: vec![Rat::zero(), rat(1)],
                        radius: radius.clone(),
                        domain,
                        label: Some(affine_label(rat(1), Rat::zero(), radius)),
                    })
                }
                (Kind::Sin, Order::Cubic) => {
                    let radius = trig_radius(sin_err_cubic, &lo, &hi);
                    Ok(Fragment {
                        poly: vec![Rat::zero(), rat(1), Rat::zero(), ratio(-1, 6)],
                        radius,
                        domain,
                        label: None,
                    })
                }
                (Kind::Cos, Order::Linear) => {
                    let radius = trig_radius(cos_err_linear, &lo, &hi);
                    Ok(Fragment {
                        poly: vec![rat(1)],
                        radius: radius.clone(),
                        domain,
                        label: Some(affine_label(Rat::zero(), rat(1), radius)),
                    })
                }
                (Kind::Cos, Order::Cubic) => {
                    let radius = trig_radius(cos_err_cubic, &lo, &hi);
                    Ok(Fragment {
                        poly: vec![rat(1), Rat::zero(), ratio(-1, 2)],
                        radius,
                        domain,
                        label: None,
                    })
                }
                (Kind::Sin, Order::Pwl) => pwl_sin(domain),
                (Kind::Cos, Order::Pwl) => Err(AbsError::PwlDomain),
                _ => unreachable!(),
            }
        }
        Kind::Sign => Ok(sign_fragment(domain)),
        Kind::Abs => {
            if lo < rat(-1) || hi > rat(1) {
                return Err(AbsError::DomainOutOfRange(
                    rat_to_f64(&lo),
                    rat_to_f64(&hi),
                    1.0,
                ));
            }
            Ok(abs_fragment(domain))
        }
    }
}

/// sgn(x) in { v : x v >= 0, v in {-1,1} }  (multi-valued at zero).
fn sign_fragment(domain: (Rat, Rat)) -> Fragment {
    // out = v; constraint over (x, v): x*v >= 0
    let xv = QuadExpr::product(&AffExpr::var(2, 0), &AffExpr::var(2, 1));
    let mut constraint = SemialgebraicSet::universal(2);
    constraint.quad_ineq.push(xv);
    Fragment {
        poly: vec![Rat::zero()],
        radius: Rat::zero(),
        domain,
        label: Some(TransitionLabel {
            a: RMat::zeros(1, 1),
            b: RMat::zeros(1, 0),
            c: RMat::from_rows(vec![vec![rat(1)]]),
            e: vec![Rat::zero()],
            constraint,
        }),
    }
}

/// abs(x) = { x v : x = (v + w)/2 } on [-1, 1], encoded with the auxiliary
/// bounded variable u = x v (so the output stays affine: out = u).
fn abs_fragment(domain: (Rat, Rat)) -> Fragment {
    // coordinates: (x, w, u, v); constraints: x - v/2 - w/2 = 0 ; u - x v = 0
    let dim = 4;
    let mut constraint = SemialgebraicSet::universal(dim);
    let mut balance = AffExpr::zero(dim);
    balance.coeffs[0] = rat(1);
    balance.coeffs[1] = ratio(-1, 2);
    balance.coeffs[3] = ratio(-1, 2);
    constraint.lin_eq.push(balance);
    let u_minus_xv = {
        let u = AffExpr::var(dim, 2);
        let xv = QuadExpr::product(&AffExpr::var(dim, 0), &AffExpr::var(dim, 3));
        let mut m = QuadExpr::from_affine(&u).mat;
        m = m.sub(&xv.mat);
        QuadExpr::from_mat(m)
    };
    constraint.quad_eq.push(u_minus_xv);
    Fragment {
        poly: vec![Rat::zero()],
        radius: Rat::zero(),
        domain,
        label: Some(TransitionLabel {
            a: RMat::zeros(1, 1),
            b: RMat::from_rows(vec![vec![Rat::zero(), rat(1)]]), // w, u
            c: RMat::zeros(1, 1),                                // v (coefficient 0)
            e: vec![Rat::zero()],
            constraint,
        }),
    }
}

/// Two-piece linear sine on [0, pi/2] with breakpoint 0.8 and error radius
/// 0.06: out = 0.65 x + 0.25 u + 0.2 - 0.2 v + 0.06 w1 with u = x v and the
/// piece selector x = 0.8 + 0.4 (w2 - v).
fn pwl_sin(domain: (Rat, Rat)) -> Result<Fragment, AbsError> {
    let (lo, hi) = domain.clone();
    if lo < Rat::zero() || hi > half_pi_upper() {
        return Err(AbsError::PwlDomain);
    }
    // coordinates: (x, w1, w2, u, v)
    let dim = 5;
    let mut constraint = SemialgebraicSet::universal(dim);
    let mut selector = AffExpr::zero(dim);
    selector.coeffs[0] = rat(1);
    selector.coeffs[2] = ratio(-2, 5);
    selector.coeffs[4] = ratio(2, 5);
    selector.constant = ratio(-4, 5);
    constraint.lin_eq.push(selector);
    let u_minus_xv = {
        let u = AffExpr::var(dim, 3);
        let xv = QuadExpr::product(&AffExpr::var(dim, 0), &AffExpr::var(dim, 4));
        QuadExpr::from_mat(QuadExpr::from_affine(&u).mat.sub(&xv.mat))
    };
    constraint.quad_eq.push(u_minus_xv);
    // u = x v ranges within [-1.6, 1.6]; keep the box explicit
    let mut u_hi = AffExpr::zero(dim);
    u_hi.coeffs[3] = rat(-1);
    u_hi.constant = ratio(8, 5);
    let mut u_lo = AffExpr::zero(dim);
    u_lo.coeffs[3] = rat(1);
    u_lo.constant = ratio(8, 5);
    constraint.lin_ineq.push(u_hi);
    constraint.lin_ineq.push(u_lo);
    Ok(Fragment {
        poly: vec![Rat::zero()],
        radius: ratio(3, 50),
        domain,
        label: Some(TransitionLabel {
            a: RMat::from_rows(vec![vec![ratio(13, 20)]]),
            // w1 (error), w2 (piece position), u (= x v)
            b: RMat::from_rows(vec![vec![ratio(3, 50), Rat::zero(), ratio(1, 4)]]),
            c: RMat::from_rows(vec![vec![ratio(-1, 5)]]),
            e: vec![ratio(1, 5)],
            constraint,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_to_f64;
    use num::Signed;

    fn radius_of(kind: Kind, lo: Rat, hi: Rat, order: Order) -> f64 {
        rat_to_f64(&abstract_nonlinearity(kind, (lo, hi), order).unwrap().radius)
    }

    #[test]
    fn tabulated_sin_constants() {
        let h = half_pi_upper();
        let p = pi_upper();
        assert_eq!(radius_of(Kind::Sin, -h.clone(), h.clone(), Order::Linear), 0.571);
        assert_eq!(radius_of(Kind::Sin, -p.clone(), p.clone(), Order::Linear), 3.142);
        assert_eq!(radius_of(Kind::Sin, -h.clone(), h, Order::Cubic), 0.076);
        assert_eq!(radius_of(Kind::Sin, -p.clone(), p, Order::Cubic), 2.027);
    }

    #[test]
    fn degenerate_point_domain_is_exact() {
        assert_eq!(radius_of(Kind::Sin, rat(0), rat(0), Order::Linear), 0.0);
    }

    #[test]
    fn out_of_range_domain_names_range() {
        let err = abstract_nonlinearity(Kind::Sin, (rat(-4), rat(4)), Order::Linear)
            .unwrap_err()
            .to_string();
        assert!(err.contains("outside the tabulated range"), "{err}");
    }

    #[test]
    fn containment_sampled() {
        // 1e5 samples per intrinsic: concrete value inside the envelope
        let h = half_pi_upper();
        let frag_lin =
            abstract_nonlinearity(Kind::Sin, (-h.clone(), h.clone()), Order::Linear).unwrap();
        let frag_cub =
            abstract_nonlinearity(Kind::Sin, (-h.clone(), h.clone()), Order::Cubic).unwrap();
        let a_lin = rat_to_f64(&frag_lin.radius);
        let a_cub = rat_to_f64(&frag_cub.radius);
        let hp = rat_to_f64(&h);
        for i in 0..100_000 {
            let x = -hp + 2.0 * hp * (i as f64) / 99_999.0;
            let s = x.sin();
            assert!((s - x).abs() <= a_lin);
            assert!((s - (x - x * x * x / 6.0)).abs() <= a_cub);
        }
    }

    #[test]
    fn pwl_sin_error_within_claimed_radius() {
        // both pieces stay within 0.06 of sin on [0, pi/2]
        for i in 0..=10_000 {
            let x = std::f64::consts::FRAC_PI_2 * (i as f64) / 10_000.0;
            let piece = if x <= 0.8 { 0.9 * x } else { 0.4 * x + 0.4 };
            assert!((x.sin() - piece).abs() <= 0.06, "x={x}");
        }
    }

    #[test]
    fn abs_fragment_is_exact_pointwise() {
        // spec route: out = u with x = (v+w)/2, u = xv reproduces |x|
        let frag = abstract_nonlinearity(Kind::Abs, (rat(-1), rat(1)), Order::Linear).unwrap();
        let label = frag.label.unwrap();
        for i in -10..=10i64 {
            let x = crate::rat::ratio(i, 10);
            // v = sign(x) (either branch at 0), w = 2x - v, u = x v
            let v = if i >= 0 { rat(1) } else { rat(-1) };
            let w = rat(2) * x.clone() - v.clone();
            let u = x.clone() * v.clone();
            let point = vec![x.clone(), w.clone(), u.clone(), v.clone()];
            assert!(label.constraint.contains(&point), "x={x}");
            let out = label.apply(&[x.clone()], &[w, u], &[v]);
            assert_eq!(out[0], x.abs());
        }
    }
}
