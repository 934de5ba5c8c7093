use crate::error::{Error, Result};
use crate::highprec::{BigReal, PrecisionContext};
use crate::kernel::{CovarianceParams, Design};
use crate::search::{multistart, SearchConfig};

use super::classify::{classify, ClassifyTol, PhaseLabel};

#[derive(Debug, Clone)]
pub struct PhaseRecord {
    pub theta: (f64, f64),
    /// Multistart optimum; `None` when the search failed.
    pub design: Option<Design>,
    pub imspe: Option<BigReal>,
    pub label: PhaseLabel,
    pub diagnostics: Option<String>,
}

/// Knobs of a phase sweep beyond the search configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub n_starts: usize,
    pub n_points: usize,
    pub classify: ClassifyTol,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            n_starts: 16,
            n_points: 4,
            classify: ClassifyTol::default(),
        }
    }
}

/// Runs a multistart search at every `(theta1, theta2)` of the grid and
/// labels the optimum. Records come back in grid order; a failed point is
/// recorded as unclassified and the sweep carries on.
pub fn phase_sweep(
    theta_grid: &[(f64, f64)],
    params_base: &CovarianceParams,
    opts: &SweepOptions,
    cfg: &SearchConfig,
    ctx: &PrecisionContext,
) -> Result<Vec<PhaseRecord>> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidConfig("theta grid is empty".into()));
    }
    if params_base.dim() != 2 {
        return Err(Error::Unsupported("phase sweeps are two-factor".into()));
    }
    cfg.validate()?;
    Ok(theta_grid
        .iter()
        .map(|&(t1, t2)| {
            let failed = |msg: String| PhaseRecord {
                theta: (t1, t2),
                design: None,
                imspe: None,
                label: PhaseLabel::Unclassified,
                diagnostics: Some(msg),
            };
            let params = match CovarianceParams::new(vec![t1, t2], params_base.sigma_z2()) {
                Ok(p) => p,
                Err(e) => return failed(e.to_string()),
            };
            match multistart(opts.n_starts, opts.n_points, &params, cfg, ctx) {
                Ok(best) => {
                    let (label, diagnostics) = match classify(&best.design, &opts.classify) {
                        Ok(l) => (l, (!best.converged).then(|| "best start did not converge".to_string())),
                        Err(e) => (PhaseLabel::Unclassified, Some(e.to_string())),
                    };
                    PhaseRecord {
                        theta: (t1, t2),
                        design: Some(best.design),
                        imspe: Some(best.imspe.imspe),
                        label,
                        diagnostics,
                    }
                }
                Err(e) => failed(e.to_string()),
            }
        })
        .collect())
}

/// A label change between neighbouring records of one constant-`theta1`
/// line.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBoundary {
    pub theta1: f64,
    /// Midpoint of the two `theta2` values.
    pub theta2: f64,
    pub below: PhaseLabel,
    pub above: PhaseLabel,
}

/// Groups records by `theta1` (first-seen order) and sorts each line by
/// `theta2`.
pub fn lines(records: &[PhaseRecord]) -> Vec<(f64, Vec<&PhaseRecord>)> {
    let mut out: Vec<(f64, Vec<&PhaseRecord>)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(t1, _)| *t1 == r.theta.0) {
            Some((_, line)) => line.push(r),
            None => out.push((r.theta.0, vec![r])),
        }
    }
    for (_, line) in &mut out {
        line.sort_by(|a, b| a.theta.1.total_cmp(&b.theta.1));
    }
    out
}

pub fn phase_boundaries(records: &[PhaseRecord]) -> Vec<PhaseBoundary> {
    let mut out = Vec::new();
    for (theta1, line) in lines(records) {
        for w in line.windows(2) {
            if w[0].label != w[1].label {
                out.push(PhaseBoundary {
                    theta1,
                    theta2: (w[0].theta.1 + w[1].theta.1) / 2.0,
                    below: w[0].label,
                    above: w[1].label,
                });
            }
        }
    }
    out
}

/// Position of a label along a constant-`theta1` line in the sequence
/// four-in-line, rhomboid with twins, rhomboid, rectangle, square,
/// rectangle, rhomboid, rhomboid with twins, four-in-line. Which half
/// applies follows from the sign of `theta2 - theta1`.
pub fn sequence_position(label: PhaseLabel, theta: (f64, f64)) -> Option<usize> {
    let r = label.rank()?;
    Some(if theta.1 <= theta.0 { r } else { 8 - r })
}

/// Whether each line's labels advance through the phase sequence without
/// stepping back. Unclassified records break monotonicity.
pub fn labels_monotone(records: &[PhaseRecord]) -> bool {
    lines(records).iter().all(|(_, line)| {
        let pos: Option<Vec<usize>> = line.iter().map(|r| sequence_position(r.label, r.theta)).collect();
        pos.is_some_and(|p| p.windows(2).all(|w| w[0] <= w[1]))
    })
}

/// Width in `log10(theta2)` of the rectangle phase (on the `theta2 <
/// theta1` side) where the IMSPE crosses `level`.
///
/// Along every line the crossing is located by linear interpolation of
/// IMSPE against `log10(theta2)` and labelled with the nearer record. The
/// width is the spread of the rectangle-labelled crossings; `None` if there
/// are none.
pub fn rectangle_width_at_level(records: &[PhaseRecord], level: f64) -> Option<f64> {
    let mut hits = Vec::new();
    for (_, line) in lines(records) {
        for w in line.windows(2) {
            let (Some(ya), Some(yb)) = (&w[0].imspe, &w[1].imspe) else {
                continue;
            };
            let (ya, yb) = (ya.to_f64(), yb.to_f64());
            if (ya - level) * (yb - level) > 0.0 || ya == yb {
                continue;
            }
            let (xa, xb) = (w[0].theta.1.log10(), w[1].theta.1.log10());
            let t = (level - ya) / (yb - ya);
            let near = if t <= 0.5 { w[0] } else { w[1] };
            if near.label == PhaseLabel::Rectangle && near.theta.1 <= near.theta.0 {
                hits.push(xa + t * (xb - xa));
            }
        }
    }
    let lo = hits.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = hits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (!hits.is_empty()).then_some(hi - lo)
}
