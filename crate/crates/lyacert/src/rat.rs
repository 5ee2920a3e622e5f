//! Exact rational scalars used throughout the model layer.
//!
//! Model data, simulation and certificate re-checking are exact; only the
//! interior-point solver works in binary64. Conversions between the two live
//! here: exact f64 -> rational embedding, continued-fraction rounding with a
//! denominator cap (for turning solver output back into checkable data), and
//! the `p/q` textual form used by the model file format.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// 2^e as an exact rational (e may be negative).
pub fn pow2(e: i64) -> Rat {
    let two = BigInt::from(2);
    if e >= 0 {
        BigRational::from_integer(two.pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), two.pow((-e) as u32))
    }
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact embedding of a finite f64 into the rationals.
pub fn f64_to_rat(x: f64) -> Rat {
    BigRational::from_float(x).expect("finite float")
}

/// Nearest rational with denominator <= `max_den`, by continued fractions.
///
/// Used when rounding solver output before exact re-verification; the margin
/// left by the strictness slack absorbs the rounding error.
pub fn rationalize(x: f64, max_den: u64) -> Rat {
    if !x.is_finite() {
        return Rat::zero();
    }
    let exact = f64_to_rat(x);
    if exact.denom().to_u64().map(|d| d <= max_den).unwrap_or(false) {
        return exact;
    }
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let mut v = x.abs();
    // convergents p/q of the continued fraction of |x|
    let (mut p0, mut q0, mut p1, mut q1) = (
        BigInt::zero(),
        BigInt::one(),
        BigInt::one(),
        BigInt::zero(),
    );
    let cap = BigInt::from(max_den);
    let mut best = BigRational::from_integer(BigInt::from(v.round() as i64));
    for _ in 0..64 {
        let a = v.floor();
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > cap {
            // best convergent within the cap is the previous one; also try the
            // semiconvergent with the largest admissible coefficient
            if !q1.is_zero() {
                let k = (&cap - &q0) / &q1;
                if !k.is_zero() {
                    let ps = &k * &p1 + &p0;
                    let qs = &k * &q1 + &q0;
                    let semi = BigRational::new(ps, qs);
                    let conv = BigRational::new(p1.clone(), q1.clone());
                    let xr = f64_to_rat(v);
                    best = if (&semi - &xr).abs() < (&conv - &xr).abs() {
                        semi
                    } else {
                        conv
                    };
                } else {
                    best = BigRational::new(p1.clone(), q1.clone());
                }
            }
            break;
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        best = BigRational::new(p1.clone(), q1.clone());
        let frac = v - a;
        if frac < 1e-18 {
            break;
        }
        v = 1.0 / frac;
    }
    if sign < 0.0 {
        -best
    } else {
        best
    }
}

/// Renders `p/q`, or just `p` for integers (model file syntax).
pub fn fmt_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("malformed rational literal `{0}`")]
pub struct RatParseError(pub String);

/// Parses `p/q`, integer, or decimal (`-3.25`, `1e-3`) literals exactly.
pub fn parse_rat(s: &str) -> Result<Rat, RatParseError> {
    let s = s.trim();
    let err = || RatParseError(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    // decimal with optional exponent
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let neg = int_part.starts_with('-');
    let digits: String = format!(
        "{}{}",
        int_part.trim_start_matches(['+', '-']),
        frac_part
    );
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let numer: BigInt = digits.parse().map_err(|_| err())?;
    let scale = frac_part.len() as i64 - exp;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::new(numer, ten.pow(scale as u32))
    } else {
        BigRational::from_integer(numer * ten.pow((-scale) as u32))
    };
    Ok(if neg { -value } else { value })
}

/// Ceiling-rounds a positive value to `sig` significant decimal digits.
///
/// Report constants (abstraction error radii, float-op error bounds) are
/// printed as sound upper bounds, so rounding is always upward.
pub fn ceil_sig(x: f64, sig: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let shift = sig as i32 - 1 - mag;
    let factor = 10f64.powi(shift);
    (x * factor).ceil() / factor
}

/// Ceiling-rounds to `dp` decimal places (sound upper bound for tabulated
/// abstraction radii, which the reports print with three decimals).
pub fn ceil_dp(x: f64, dp: u32) -> f64 {
    let factor = 10f64.powi(dp as i32);
    (x * factor).ceil() / factor
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rat("-7").unwrap(), rat(-7));
        assert_eq!(parse_rat("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rat("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rat("-2.5e2").unwrap(), rat(-250));
        assert!(parse_rat("x/3").is_err());
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn roundtrip_fmt() {
        for r in [ratio(22, 7), rat(-3), ratio(-1, 1000000)] {
            assert_eq!(parse_rat(&fmt_rat(&r)).unwrap(), r);
        }
    }

    #[test]
    fn rationalize_caps_denominator() {
        let x = std::f64::consts::PI;
        let r = rationalize(x, 1000);
        assert!(r.denom().to_u64().unwrap() <= 1000);
        assert!((rat_to_f64(&r) - x).abs() < 1e-6);
        // exact small fractions pass through
        assert_eq!(rationalize(0.25, 100), ratio(1, 4));
    }

    #[test]
    fn ceil_sig_rounds_up() {
        assert_eq!(ceil_sig(0.119209, 2), 0.12);
        assert!((ceil_sig(2.2204e-6, 2) - 2.3e-6).abs() < 1e-18);
        assert_eq!(ceil_sig(0.5708, 3), 0.571);
        assert_eq!(ceil_sig(3.1416, 4), 3.142);
    }
}
