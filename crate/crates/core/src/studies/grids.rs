use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::highprec::{BigReal, PrecisionContext};
use crate::imspe::imspe_gap;
use crate::kernel::{CovarianceParams, Design};
use crate::search::BaselineReport;

/// Value reported for the node where the two twins coincide: the lowest
/// value the shifted log gap can take, `log10(1e-16)`.
pub const COINCIDENT_GAP: f64 = -16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HueNode {
    pub u: f64,
    pub v: f64,
    /// `log10(imspe - reference + 1e-16)`, NaN where evaluation failed.
    pub gap: f64,
}

/// The grid coordinates `-1 + 2 i / (n - 1)`.
pub fn grid_axis(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            // Exact at the ends and at the middle of an odd grid.
            let t = 2 * i as i64 - (n as i64 - 1);
            t as f64 / (n - 1) as f64
        })
        .collect()
}

/// Log gaps with the first twin at each node `(u, v)` of an `n x n` grid on
/// `[-1, 1]^2` and the second at its reflection through the barycenter.
///
/// Nodes are emitted row-major: `v` is the slow index, `u` the fast one,
/// both ascending.
pub fn hue_grid(
    base: &Design,
    params: &CovarianceParams,
    grid_n: usize,
    reference_imspe: &BigReal,
    ctx: &PrecisionContext,
) -> Result<Vec<HueNode>> {
    let twin = base
        .twin()
        .ok_or_else(|| Error::InvalidDesign("hue grid base has no twin pair".into()))?;
    if base.dim() != 2 {
        return Err(Error::Unsupported("hue grids are two-factor".into()));
    }
    if grid_n < 2 {
        return Err(Error::InvalidConfig("grid_n must be at least 2".into()));
    }
    let axis = grid_axis(grid_n);
    let nodes: Vec<(f64, f64)> = axis.iter().flat_map(|&v| axis.iter().map(move |&u| (u, v))).collect();
    let xt = twin.barycenter.clone();
    Ok(nodes
        .into_par_iter()
        .map(|(u, v)| {
            let delta = vec![u - xt[0], v - xt[1]];
            let gap = if delta.iter().all(|&d| d == 0.0) {
                COINCIDENT_GAP
            } else {
                base.with_twin_params(xt.clone(), delta)
                    .and_then(|d| imspe_gap(&d, params, reference_imspe, ctx))
                    .map_or(f64::NAN, |g| g.to_f64())
            };
            HueNode { u, v, gap }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TornadoPoint {
    pub index: usize,
    /// Largest half-distance in factor 1 between two points of the design.
    pub d: f64,
    /// `log10(imspe - reference)`; NaN if the sample failed or does not
    /// lie above the reference.
    pub gap: f64,
}

/// Largest `|x_i1 - x_j1| / 2` over pairs of points.
pub fn half_spread(design: &Design) -> f64 {
    let xs: Vec<f64> = design.points().iter().map(|p| p[0]).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / 2.0
}

pub fn tornado_data(report: &BaselineReport, reference_imspe: &BigReal) -> Vec<TornadoPoint> {
    report
        .records
        .iter()
        .map(|r| {
            let gap = match &r.imspe {
                Some(v) => {
                    let g = v - reference_imspe;
                    if g > 0.0 {
                        g.log10_abs()
                    } else {
                        f64::NAN
                    }
                }
                None => f64::NAN,
            };
            TornadoPoint {
                index: r.index,
                d: half_spread(&r.design),
                gap,
            }
        })
        .collect()
}
