use rug::float::Constant;
use rug::Float;

use super::{BigReal, PrecisionContext};
use crate::error::{Error, Result};

/// Above this magnitude the alternating series is abandoned for the erfc
/// continued fraction.
const SERIES_LIMIT: f64 = 4.0;

/// Error function at the context's precision.
///
/// Odd symmetry is exact: the magnitude is computed once and the sign
/// reapplied.
pub fn erf(x: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("erf of non-finite argument {x:?}")));
    }
    Ok(BigReal::from_float(erf_float(x.as_float(), ctx.bits())))
}

/// `erf` on a raw MPFR value, rounded to `bits`. The argument must be finite.
pub fn erf_float(x: &Float, bits: u32) -> Float {
    debug_assert!(x.is_finite());
    if x.is_zero() {
        return Float::with_val(bits, 0);
    }
    let magnitude = Float::with_val(x.prec().max(bits), x.abs_ref());
    let value = if magnitude <= SERIES_LIMIT {
        erf_series(&magnitude, bits)
    } else {
        erf_large(&magnitude, bits)
    };
    if x.is_sign_negative() {
        -value
    } else {
        value
    }
}

/// Maclaurin series erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1)).
/// Terms peak near exp(x^2) before decaying, so that many guard bits are added.
fn erf_series(x: &Float, bits: u32) -> Float {
    let x_f64 = x.to_f64();
    let guard = (x_f64 * x_f64 * std::f64::consts::LOG2_E).ceil() as u32 + 24;
    let wp = bits + guard;

    let x = Float::with_val(wp, x);
    let neg_x2 = -Float::with_val(wp, x.square_ref());
    let mut term = x.clone();
    let mut sum = x;
    let mut n: u32 = 1;
    loop {
        term *= &neg_x2;
        term /= n;
        let contrib = Float::with_val(wp, &term / (2 * n + 1));
        sum += &contrib;
        if contrib.is_zero() || exp_of(&contrib) < exp_of(&sum) - wp as i32 {
            break;
        }
        n += 1;
    }
    let two_over_sqrt_pi = two_over_sqrt_pi(wp);
    Float::with_val(bits, sum * two_over_sqrt_pi)
}

/// erf(x) = 1 - erfc(x) for x > 0 large, with erfc from its continued fraction
/// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
fn erf_large(x: &Float, bits: u32) -> Float {
    // erfc(x) < exp(-x^2) / (x sqrt(pi)); below half an ulp of 1 the result is 1.
    let x_f64 = x.to_f64();
    if x_f64 * x_f64 * std::f64::consts::LOG2_E > (bits + 2) as f64 {
        return Float::with_val(bits, 1);
    }
    let wp = bits + 24;
    let x = Float::with_val(wp, x);
    let tiny = Float::with_val(wp, Float::i_exp(1, -(4 * wp as i32)));

    // Modified Lentz evaluation of b0 + a1/(b1 + a2/(b2 + ...)), a_n = n/2, b_n = x.
    let mut f = x.clone();
    let mut c = x.clone();
    let mut d = Float::with_val(wp, 0);
    let mut n: u32 = 1;
    loop {
        let a_n = Float::with_val(wp, n) / 2u32;
        d = Float::with_val(wp, &a_n * &d) + &x;
        if d.is_zero() {
            d = tiny.clone();
        }
        d.recip_mut();
        c = Float::with_val(wp, &a_n / &c) + &x;
        if c.is_zero() {
            c = tiny.clone();
        }
        let delta = Float::with_val(wp, &c * &d);
        f *= &delta;
        let dev = delta - 1u32;
        if dev.is_zero() || exp_of(&dev) < -(wp as i32) {
            break;
        }
        n += 1;
    }
    let neg_x2 = -Float::with_val(wp, x.square_ref());
    let sqrt_pi = Float::with_val(wp, Constant::Pi).sqrt();
    let erfc = neg_x2.exp() / sqrt_pi / f;
    Float::with_val(bits, 1u32 - erfc)
}

fn two_over_sqrt_pi(wp: u32) -> Float {
    let sqrt_pi = Float::with_val(wp, Constant::Pi).sqrt();
    Float::with_val(wp, 2u32 / sqrt_pi)
}

fn exp_of(x: &Float) -> i32 {
    x.get_exp().unwrap_or(i32::MIN / 2)
}
