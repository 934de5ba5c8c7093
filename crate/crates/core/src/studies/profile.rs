use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::highprec::{BigReal, LuFactor, Matrix, PrecisionContext};
use crate::imspe::imspe;
use crate::kernel::{CovarianceParams, Design};

#[derive(Debug, Clone)]
pub struct ProfilePoint {
    /// Twin half-separation.
    pub delta: f64,
    /// 1-based factor along which the twins are separated.
    pub axis: usize,
    pub imspe: BigReal,
}

/// IMSPE of `base` with its twin offset set to `delta` along `axis`
/// (1-based) and zero along the other factors, for each `delta`.
pub fn twin_profile(
    base: &Design,
    params: &CovarianceParams,
    axis: usize,
    deltas: &[f64],
    ctx: &PrecisionContext,
) -> Result<Vec<ProfilePoint>> {
    let twin = base
        .twin()
        .ok_or_else(|| Error::InvalidDesign("profile base has no twin pair".into()))?;
    if axis < 1 || axis > base.dim() {
        return Err(Error::InvalidConfig(format!("axis {axis} outside 1..={}", base.dim())));
    }
    if deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidConfig("profile offsets must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("profile offsets must be sorted ascending".into()));
    }
    deltas
        .par_iter()
        .map(|&delta| {
            let mut offset = vec![0.0; base.dim()];
            offset[axis - 1] = delta;
            let design = base.with_twin_params(twin.barycenter.clone(), offset)?;
            Ok(ProfilePoint {
                delta,
                axis,
                imspe: imspe(&design, params, ctx)?.imspe,
            })
        })
        .collect()
}

/// Even quadratic model `limit + c2 delta^2 + c4 delta^4` through three
/// profile points.
#[derive(Debug, Clone)]
pub struct EvenFit {
    pub limit: BigReal,
    pub c2: BigReal,
    pub c4: BigReal,
}

/// Richardson-style extrapolation to zero separation from exactly three
/// points: solves for the even model exactly.
pub fn richardson(points: &[ProfilePoint], ctx: &PrecisionContext) -> Result<EvenFit> {
    if points.len() != 3 {
        return Err(Error::InvalidConfig("extrapolation needs exactly three points".into()));
    }
    let mut a = Matrix::zeros(3, 3, ctx);
    let mut b = Matrix::zeros(3, 1, ctx);
    for (i, p) in points.iter().enumerate() {
        let d2 = BigReal::from_f64(p.delta, ctx).square();
        a.set(i, 0, BigReal::one(ctx));
        a.set(i, 1, d2.clone());
        a.set(i, 2, d2.square());
        b.set(i, 0, p.imspe.clone());
    }
    let x = LuFactor::new(&a, ctx)?.solve(&b);
    Ok(EvenFit {
        limit: x.get(0, 0).clone(),
        c2: x.get(1, 0).clone(),
        c4: x.get(2, 0).clone(),
    })
}

/// Least-squares slope of `log10|imspe - limit|` against `log10 delta`.
pub fn loglog_slope(points: &[ProfilePoint], limit: &BigReal) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidConfig("a slope needs at least two points".into()));
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.delta.log10(), (&p.imspe - limit).log10_abs()))
        .collect();
    if xy.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Domain("profile value equals the limit".into()));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("slope needs distinct offsets".into()));
    }
    Ok(sxy / sxx)
}
