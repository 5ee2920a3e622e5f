//! IEEE-754 rounding-error envelopes: float(x op y) is contained in
//! { x op y + delta*w : w in [-1,1] } with delta = alpha*gamma + beta for
//! operands and results certified within [-alpha, alpha].

use crate::rat::{ceil_sig, pow2, rat_to_f64, Rat};
use num::Zero;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloatFormat {
    /// fraction bits
    pub p: u32,
    /// exponent bits
    pub q: u32,
    pub bias: i64,
}

pub const F32: FloatFormat = FloatFormat { p: 23, q: 8, bias: 127 };
pub const F64: FloatFormat = FloatFormat { p: 52, q: 11, bias: 1023 };

#[derive(Debug, thiserror::Error)]
pub enum FloatAbsError {
    #[error(
        "operand range {alpha} reaches the format's largest finite value {max}; \
         overflow to infinity is not modeled"
    )]
    RangeTooLarge { alpha: f64, max: f64 },
    #[error("operand range must be positive")]
    NonPositiveRange,
}

impl FloatFormat {
    /// relative rounding step 2^-p
    pub fn gamma(&self) -> Rat {
        pow2(-(self.p as i64))
    }

    /// smallest positive value 2^(1 - bias - p)
    pub fn beta(&self) -> Rat {
        pow2(1 - self.bias - self.p as i64)
    }

    /// largest finite value (2 - 2^-p) * 2^(2^q - bias - 2)
    pub fn alpha_max(&self) -> Rat {
        let two = crate::rat::rat(2);
        (two - self.gamma()) * pow2((1i64 << self.q) - self.bias - 2)
    }

    /// Exact error radius for one arithmetic op on operands within
    /// [-alpha, alpha]: delta = alpha * gamma + beta.
    pub fn delta(&self, alpha: &Rat) -> Result<Rat, FloatAbsError> {
        if alpha < &Rat::zero() {
            return Err(FloatAbsError::NonPositiveRange);
        }
        if alpha >= &self.alpha_max() {
            return Err(FloatAbsError::RangeTooLarge {
                alpha: rat_to_f64(alpha),
                max: rat_to_f64(&self.alpha_max()),
            });
        }
        Ok(alpha * self.gamma() + self.beta())
    }

    /// The report form of delta: ceiling-rounded to two significant digits,
    /// so the printed constant is itself a sound radius.
    pub fn delta_printed(&self, alpha: &Rat) -> Result<f64, FloatAbsError> {
        Ok(ceil_sig(rat_to_f64(&self.delta(alpha)?), 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use num::Signed;

    #[test]
    fn format_constants() {
        assert_eq!(F32.gamma(), pow2(-23));
        assert_eq!(F32.beta(), pow2(-149));
        assert_eq!(F64.beta(), pow2(-1074));
        // largest single-precision finite value ~ 3.4e38
        let amax = rat_to_f64(&F32.alpha_max());
        assert!((amax - 3.4028234663852886e38).abs() / amax < 1e-12);
    }

    #[test]
    fn printed_deltas_match_reports() {
        let d32 = F32.delta_printed(&rat(1_000_000)).unwrap();
        assert_eq!(d32, 0.12);
        let d64 = F64.delta_printed(&rat(10_000_000_000)).unwrap();
        assert!((d64 - 2.3e-6).abs() < 1e-18);
    }

    #[test]
    fn delta_is_exact_and_monotone() {
        let a1 = rat(100);
        let a2 = rat(1000);
        let d1 = F64.delta(&a1).unwrap();
        let d2 = F64.delta(&a2).unwrap();
        assert!(d2 > d1);
        assert_eq!(d1, rat(100) * pow2(-52) + pow2(-1074));
        // zero operands: delta = beta, and 0 is inside the relation
        assert_eq!(F64.delta(&rat(0)).unwrap(), F64.beta());
    }

    #[test]
    fn alpha_beyond_format_refused() {
        let too_big = F32.alpha_max() + rat(1);
        assert!(F32.delta(&too_big).is_err());
        assert!(F32.delta(&ratio(-1, 2)).is_err());
    }

    #[test]
    fn hardware_ops_stay_inside_envelope() {
        // concrete float ops vs the exact-rational envelope
        let alpha = rat(1000);
        let d32 = F32.delta(&alpha).unwrap();
        let d64 = F64.delta(&alpha).unwrap();
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64 * 2000.0 - 1000.0
        };
        for _ in 0..20_000 {
            let a = next();
            let b = next();
            let exact_a = crate::rat::f64_to_rat(a);
            let exact_b = crate::rat::f64_to_rat(b);
            // f64 ops
            for (op, exact) in [
                (a + b, &exact_a + &exact_b),
                (a - b, &exact_a - &exact_b),
                (a * b, &exact_a * &exact_b),
            ] {
                if exact.clone().abs() <= alpha {
                    let err = (crate::rat::f64_to_rat(op) - &exact).abs();
                    assert!(err <= d64, "f64 {op} vs exact: err {err}");
                }
            }
            // f32 ops
            let (af, bf) = (a as f32, b as f32);
            let (ea, eb) = (crate::rat::f64_to_rat(af as f64), crate::rat::f64_to_rat(bf as f64));
            for (op, exact) in [
                ((af + bf) as f64, &ea + &eb),
                ((af - bf) as f64, &ea - &eb),
                ((af * bf) as f64, &ea * &eb),
            ] {
                if exact.clone().abs() <= alpha {
                    let err = (crate::rat::f64_to_rat(op) - &exact).abs();
                    assert!(err <= d32, "f32 {op} vs exact: err {err}");
                }
            }
        }
    }
}
