//! Gaussian covariance entries and the closed-form integrals behind the
//! bordered matrices `L` and `R`.
//!
//! With `v_i(x) = sigma_z^2 exp(-sum_k theta_k (x_ik - x_k)^2)` and the domain
//! `[-1, 1]^D` under the uniform measure:
//!
//! ```text
//!     | 0      sigma^2 ... |          | 1     S1(x_j)                                  |
//! L = | sigma^2    V_ij    |      R = | S1(x_i)   S2((x_i+x_j)/2) exp(-sum theta d^2/2) |
//! ```
//!
//! Both integrals factor over coordinates, so everything reduces to sums of
//! two error functions per factor.

mod design;
mod tables;

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::highprec::{erf_float, BigReal, Matrix, PrecisionContext};

pub use design::{Design, TwinSpec};
pub use tables::KernelTables;

/// Gaussian covariance parameters `theta` (one per factor) and process
/// variance `sigma_z2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceParams {
    theta: Vec<f64>,
    sigma_z2: f64,
}

impl CovarianceParams {
    pub fn new(theta: Vec<f64>, sigma_z2: f64) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParams("theta must have at least one entry".into()));
        }
        for (k, &t) in theta.iter().enumerate() {
            // Every formula divides by theta_k, so zero is excluded.
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "theta_{} = {t} must be finite and strictly positive",
                    k + 1
                )));
            }
        }
        if !(sigma_z2.is_finite() && sigma_z2 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sigma_z^2 = {sigma_z2} must be finite and strictly positive"
            )));
        }
        Ok(Self { theta, sigma_z2 })
    }

    /// Unit process variance.
    pub fn unit(theta: Vec<f64>) -> Result<Self> {
        Self::new(theta, 1.0)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sigma_z2(&self) -> f64 {
        self.sigma_z2
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn with_unit_variance(&self) -> Self {
        Self {
            theta: self.theta.clone(),
            sigma_z2: 1.0,
        }
    }

    pub fn swap_factors(&self, a: usize, b: usize) -> Self {
        let mut theta = self.theta.clone();
        theta.swap(a, b);
        Self {
            theta,
            sigma_z2: self.sigma_z2,
        }
    }

    pub(crate) fn check_design(&self, design: &Design) -> Result<()> {
        if design.dim() != self.dim() {
            return Err(Error::InvalidParams(format!(
                "design has {} factors but theta has {}",
                design.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// The bordered matrices whose trace product gives the IMSPE.
#[derive(Debug, Clone)]
pub struct CovMatrices {
    pub l: Matrix,
    pub r: Matrix,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta = {theta} must be strictly positive")))
    }
}

/// `erf(s (1 + a)) + erf(s (1 - a))`, the factor shared by every integral.
pub(crate) fn erf_pair(s: &Float, a: &Float, bits: u32) -> Float {
    let up = Float::with_val(bits, 1u32 + a) * s;
    let down = Float::with_val(bits, 1u32 - a) * s;
    erf_float(&up, bits) + erf_float(&down, bits)
}

/// `sqrt(pi / (16 l theta))`, the prefactor of the `l`-fold integral.
pub(crate) fn prefactor(theta: f64, l: u32, bits: u32) -> Float {
    let pi = Float::with_val(bits, Constant::Pi);
    let denom = Float::with_val(bits, theta) * (16 * l);
    (pi / denom).sqrt()
}

/// `sqrt(l theta)`.
pub(crate) fn erf_scale(theta: f64, l: u32, bits: u32) -> Float {
    (Float::with_val(bits, theta) * l).sqrt()
}

/// Gaussian covariance `sigma_z^2 exp(-sum_k theta_k (x_ik - x_jk)^2)`.
pub fn cov_entry(
    xi: &[f64],
    xj: &[f64],
    params: &CovarianceParams,
    ctx: &PrecisionContext,
) -> Result<BigReal> {
    if xi.len() != params.dim() || xj.len() != params.dim() {
        return Err(Error::Domain("point dimension does not match theta".into()));
    }
    let bits = ctx.bits();
    let mut exponent = Float::with_val(bits, 0);
    for ((&a, &b), &t) in xi.iter().zip(xj).zip(params.theta()) {
        let diff = Float::with_val(bits, a) - b;
        exponent += diff.square() * t;
    }
    let v = (-exponent).exp() * params.sigma_z2();
    Ok(BigReal::from_float(v))
}

/// `(1/2) ∫_{-1}^{1} exp(-theta (a - x)^2) dx`
/// `= sqrt(pi/(16 theta)) [erf(sqrt(theta)(1 + a)) + erf(sqrt(theta)(1 - a))]`.
pub fn i1(theta: f64, a: f64, ctx: &PrecisionContext) -> Result<BigReal> {
    check_theta(theta)?;
    if !a.is_finite() {
        return Err(Error::Domain(format!("non-finite location {a}")));
    }
    let bits = ctx.bits();
    let a = Float::with_val(bits, a);
    let value = prefactor(theta, 1, bits) * erf_pair(&erf_scale(theta, 1, bits), &a, bits);
    Ok(BigReal::from_float(value))
}

/// `(1/2) ∫_{-1}^{1} exp(-theta [(a - x)^2 + (b - x)^2]) dx`.
pub fn i2(theta: f64, a: f64, b: f64, ctx: &PrecisionContext) -> Result<BigReal> {
    check_theta(theta)?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("non-finite locations ({a}, {b})")));
    }
    let bits = ctx.bits();
    let fa = Float::with_val(bits, a);
    let mid = (Float::with_val(bits, &fa + b)) / 2u32;
    let diff = fa - b;
    let damping = (-(diff.square() * theta) / 2u32).exp();
    let value = prefactor(theta, 2, bits) * erf_pair(&erf_scale(theta, 2, bits), &mid, bits) * damping;
    Ok(BigReal::from_float(value))
}

/// `S_l(x) = sigma_z^(2l) prod_k sqrt(pi/(16 l theta_k)) [erf(sqrt(l theta_k)(1 + x_k)) + erf(sqrt(l theta_k)(1 - x_k))]`.
pub fn s_l(xi: &[f64], params: &CovarianceParams, l: u32, ctx: &PrecisionContext) -> Result<BigReal> {
    if l != 1 && l != 2 {
        return Err(Error::Domain(format!("S_l is defined for l in {{1, 2}}, got {l}")));
    }
    if xi.len() != params.dim() {
        return Err(Error::Domain("point dimension does not match theta".into()));
    }
    let bits = ctx.bits();
    let hp: Vec<Float> = xi.iter().map(|&x| Float::with_val(bits, x)).collect();
    Ok(BigReal::from_float(s_l_hp(&hp, params, l, bits)))
}

pub(crate) fn s_l_hp(xi: &[Float], params: &CovarianceParams, l: u32, bits: u32) -> Float {
    let mut acc = Float::with_val(bits, params.sigma_z2()).pow_u(l);
    for (x, &t) in xi.iter().zip(params.theta()) {
        acc *= prefactor(t, l, bits) * erf_pair(&erf_scale(t, l, bits), x, bits);
    }
    acc
}

trait PowU {
    fn pow_u(self, n: u32) -> Self;
}

impl PowU for Float {
    fn pow_u(self, n: u32) -> Self {
        let mut out = Float::with_val(self.prec(), 1);
        for _ in 0..n {
            out *= &self;
        }
        out
    }
}

/// The bordered covariance matrix `L`.
pub fn build_l(design: &Design, params: &CovarianceParams, ctx: &PrecisionContext) -> Result<Matrix> {
    Ok(build_matrices(design, params, ctx)?.l)
}

/// The bordered integral matrix `R`.
pub fn build_r(design: &Design, params: &CovarianceParams, ctx: &PrecisionContext) -> Result<Matrix> {
    Ok(build_matrices(design, params, ctx)?.r)
}

/// Both matrices from one pass over the factor tables.
pub fn build_matrices(
    design: &Design,
    params: &CovarianceParams,
    ctx: &PrecisionContext,
) -> Result<CovMatrices> {
    let tables = KernelTables::new(design, params, ctx)?;
    let (l, r) = tables.matrices();
    Ok(CovMatrices { l, r })
}
