//! Extended-precision reals and the handful of special functions the IMSPE
//! formulas need.
//!
//! Arithmetic is backed by MPFR through `rug`. Precision lives in a
//! [`PrecisionContext`]; a [`BigReal`] carries whatever precision it was
//! created with and is never mutated in place by the public API.

mod erf;
mod linalg;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use erf::{erf, erf_float};
pub use linalg::{solve_sym, LuFactor, Matrix};

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Extra bits carried beyond the requested decimal digits.
const GUARD_BITS: u32 = 16;

/// Working precision plus the escalation policy used when a computation
/// turns out to be too ill-conditioned for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionContext {
    digits: u32,
    max_digits: u32,
    escalation_factor: u32,
    /// Escalate until at least this many digits survive conditioning and
    /// cancellation (0: only the half-precision rule applies).
    #[serde(default)]
    min_correct: u32,
}

impl PrecisionContext {
    pub const MIN_DIGITS: u32 = 16;
    pub const DEFAULT_DIGITS: u32 = 60;
    pub const DEFAULT_MAX_DIGITS: u32 = 960;

    /// Context at `digits` with the default ceiling (raised to `digits` if
    /// the request exceeds it) and doubling escalation.
    pub fn new(digits: u32) -> Result<Self> {
        Self::with_limits(digits, digits.max(Self::DEFAULT_MAX_DIGITS), 2)
    }

    pub fn with_limits(digits: u32, max_digits: u32, escalation_factor: u32) -> Result<Self> {
        if digits < Self::MIN_DIGITS {
            return Err(Error::InvalidConfig(format!(
                "working precision must be at least {} digits, got {digits}",
                Self::MIN_DIGITS
            )));
        }
        if max_digits < digits {
            return Err(Error::InvalidConfig(format!(
                "max_digits ({max_digits}) is below digits ({digits})"
            )));
        }
        if escalation_factor < 2 {
            return Err(Error::InvalidConfig(format!(
                "escalation factor must be at least 2, got {escalation_factor}"
            )));
        }
        Ok(Self {
            digits,
            max_digits,
            escalation_factor,
            min_correct: 0,
        })
    }

    /// Same context, demanding `min_correct` trustworthy digits from
    /// escalating evaluations.
    pub fn with_min_correct(self, min_correct: u32) -> Self {
        Self { min_correct, ..self }
    }

    pub fn min_correct(&self) -> u32 {
        self.min_correct
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn max_digits(&self) -> u32 {
        self.max_digits
    }

    pub fn escalation_factor(&self) -> u32 {
        self.escalation_factor
    }

    /// Binary precision used for MPFR values under this context.
    pub fn bits(&self) -> u32 {
        (self.digits as f64 * LOG2_10).ceil() as u32 + GUARD_BITS
    }

    /// The next rung of the escalation ladder, clamped to `max_digits`, or
    /// `None` once the ceiling has been reached.
    pub fn escalate(&self) -> Option<Self> {
        if self.digits >= self.max_digits {
            return None;
        }
        let next = self
            .digits
            .saturating_mul(self.escalation_factor)
            .min(self.max_digits);
        Some(Self {
            digits: next,
            ..*self
        })
    }

    /// Same policy at a different working precision (clamped to the ceiling).
    pub fn at_digits(&self, digits: u32) -> Self {
        Self {
            digits: digits.clamp(Self::MIN_DIGITS, self.max_digits),
            ..*self
        }
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            digits: Self::DEFAULT_DIGITS,
            max_digits: Self::DEFAULT_MAX_DIGITS,
            escalation_factor: 2,
            min_correct: 0,
        }
    }
}

/// An extended-precision real number.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigReal(Float);

impl BigReal {
    pub fn from_f64(x: f64, ctx: &PrecisionContext) -> Self {
        BigReal(Float::with_val(ctx.bits(), x))
    }

    pub fn from_int(x: i64, ctx: &PrecisionContext) -> Self {
        BigReal(Float::with_val(ctx.bits(), x))
    }

    pub fn zero(ctx: &PrecisionContext) -> Self {
        Self::from_int(0, ctx)
    }

    pub fn one(ctx: &PrecisionContext) -> Self {
        Self::from_int(1, ctx)
    }

    pub fn from_float(f: Float) -> Self {
        BigReal(f)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    /// Parses decimal text (plain or scientific notation) at the context's
    /// precision.
    pub fn parse(text: &str, ctx: &PrecisionContext) -> Result<Self> {
        let parsed = Float::parse(text.trim())
            .map_err(|e| Error::Domain(format!("cannot parse {text:?} as a real: {e}")))?;
        Ok(BigReal(Float::with_val(ctx.bits(), parsed)))
    }

    /// Scientific-notation text with exactly `digits` significant digits,
    /// e.g. `6.6821100000e-5`.
    pub fn to_sci_string(&self, digits: u32) -> String {
        let digits = digits.max(1) as usize;
        if self.0.is_zero() {
            return format!("{:.*e}", digits - 1, 0.0f64);
        }
        let text = self.0.to_string_radix(10, Some(digits));
        normalize_sci(&text)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    pub fn abs(&self) -> Self {
        BigReal(self.0.clone().abs())
    }

    pub fn square(&self) -> Self {
        BigReal(self.0.clone().square())
    }

    /// Decimal exponent estimate: log10(|x|), `-inf` for zero.
    pub fn log10_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (mantissa, exp) = self.0.to_f64_exp();
        mantissa.abs().log10() + exp as f64 * std::f64::consts::LOG10_2
    }

    pub fn log10(&self, ctx: &PrecisionContext) -> Self {
        BigReal(Float::with_val(ctx.bits(), self.0.log10_ref()))
    }
}

fn normalize_sci(text: &str) -> String {
    // MPFR prints `6.68e-5` style already; only the exponent marker varies.
    let text = text.replace('@', "e");
    if text.contains('e') {
        text
    } else {
        format!("{text}e0")
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({})", self.to_sci_string(25))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().map(|p| p as u32 + 1).unwrap_or(20);
        f.write_str(&self.to_sci_string(digits))
    }
}

impl PartialEq<f64> for BigReal {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for BigReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

macro_rules! bin_op {
    ($trait:ident, $method:ident) => {
        impl $trait<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                let prec = self.0.prec().max(rhs.0.prec());
                BigReal(Float::with_val(prec, (&self.0).$method(&rhs.0)))
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<f64> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: f64) -> BigReal {
                BigReal(Float::with_val(self.0.prec(), (&self.0).$method(rhs)))
            }
        }
    };
}

bin_op!(Add, add);
bin_op!(Sub, sub);
bin_op!(Mul, mul);
bin_op!(Div, div);

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(Float::with_val(self.0.prec(), -&self.0))
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

fn require_finite(x: &BigReal, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} of non-finite argument {x:?}")))
    }
}

pub fn exp_hp(x: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    require_finite(x, "exp")?;
    Ok(BigReal(Float::with_val(ctx.bits(), x.0.exp_ref())))
}

pub fn sqrt_hp(x: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    require_finite(x, "sqrt")?;
    if x.0 < 0 {
        return Err(Error::Domain(format!("sqrt of negative argument {x:?}")));
    }
    Ok(BigReal(Float::with_val(ctx.bits(), x.0.sqrt_ref())))
}

pub fn pi_hp(ctx: &PrecisionContext) -> BigReal {
    BigReal(Float::with_val(ctx.bits(), Constant::Pi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(d: u32) -> PrecisionContext {
        PrecisionContext::new(d).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(PrecisionContext::new(15).is_err());
        assert!(PrecisionContext::with_limits(60, 30, 2).is_err());
        assert!(PrecisionContext::with_limits(60, 120, 1).is_err());
        let c = PrecisionContext::default();
        assert_eq!(c.digits(), 60);
        assert_eq!(c.max_digits(), 960);
    }

    #[test]
    fn escalation_ladder_is_clamped() {
        let mut c = PrecisionContext::with_limits(16, 960, 2).unwrap();
        let mut seen = vec![c.digits()];
        while let Some(next) = c.escalate() {
            c = next;
            seen.push(c.digits());
        }
        assert_eq!(seen, vec![16, 32, 64, 128, 256, 512, 960]);
    }

    #[test]
    fn bits_cover_requested_digits() {
        for d in [16, 60, 120, 960] {
            assert!(ctx(d).bits() as f64 >= d as f64 * LOG2_10);
        }
    }

    #[test]
    fn elementary_functions() {
        let c = ctx(60);
        assert_eq!(exp_hp(&BigReal::zero(&c), &c).unwrap(), 1.0);
        assert_eq!(sqrt_hp(&BigReal::from_int(4, &c), &c).unwrap(), 2.0);
        assert!(sqrt_hp(&BigReal::from_int(-1, &c), &c).is_err());
        let nan = BigReal::from_f64(f64::NAN, &c);
        assert!(exp_hp(&nan, &c).is_err());
    }

    #[test]
    fn pi_matches_published_digits() {
        let c = ctx(50);
        let pi = pi_hp(&c).to_sci_string(50);
        assert_eq!(pi, "3.1415926535897932384626433832795028841971693993751e0");
    }

    #[test]
    fn sci_string_round_trip() {
        let c = ctx(60);
        let x = pi_hp(&c) / BigReal::from_int(7000, &c);
        let text = x.to_sci_string(60);
        let back = BigReal::parse(&text, &c).unwrap();
        let rel = ((&back - &x) / &x).abs();
        assert!(rel < 1e-59, "{text} vs {x:?}");
        assert_eq!(BigReal::zero(&c).to_sci_string(3), "0.00e0");
        assert!(BigReal::parse("abc", &c).is_err());
    }

    #[test]
    fn log10_abs_estimate() {
        let c = ctx(30);
        let x = BigReal::parse("-2.5e-300", &c).unwrap();
        assert!((x.log10_abs() - (2.5f64.log10() - 300.0)).abs() < 1e-12);
        assert_eq!(BigReal::zero(&c).log10_abs(), f64::NEG_INFINITY);
    }
}
