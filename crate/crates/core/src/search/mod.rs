//! IMSPE-optimal design search: cyclic coordinate descent, a seeded
//! multistart wrapper, and the uniform-random baseline.

mod baseline;
mod canonical;
mod line;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::highprec::{BigReal, PrecisionContext};
use crate::imspe::{Evaluator, ImspeResult};
use crate::kernel::{CovarianceParams, Design};

pub use baseline::{baseline_from_designs, random_baseline, BaselineRecord, BaselineReport, GapHistogram};
pub use canonical::canonicalize;
pub use line::{line_minimize, Sample};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchConfig {
    /// A sweep converges once no coordinate moved by this much...
    pub coord_tol: f64,
    /// ...and the IMSPE improved by less than this.
    pub obj_tol: f64,
    pub max_sweeps: usize,
    /// Points in the bracketing scan of each line search.
    pub line_search_grid: usize,
    pub rng_seed: u64,
    /// Two points closer than this in every factor are re-expressed as a
    /// twin pair.
    pub twin_merge_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            coord_tol: 1e-10,
            obj_tol: 1e-20,
            max_sweeps: 200,
            line_search_grid: 33,
            rng_seed: 0,
            twin_merge_tol: 1e-8,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.coord_tol > 0.0 && self.obj_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_sweeps < 1 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        if self.line_search_grid < 2 {
            return Err(Error::InvalidConfig("line_search_grid must be at least 2".into()));
        }
        if !(self.twin_merge_tol >= 0.0) {
            return Err(Error::InvalidConfig("twin_merge_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Canonicalized optimum.
    pub design: Design,
    pub imspe: ImspeResult,
    pub sweeps: usize,
    pub converged: bool,
    /// IMSPE after each sweep (sweep 0 is the initial design).
    pub trace: Vec<(usize, BigReal)>,
    /// Index of the winning start for multistart runs.
    pub start_index: usize,
}

/// One scalar degree of freedom of the descent.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Coord {
    Raw { row: usize, k: usize },
    Barycenter { k: usize },
    Delta { k: usize },
}

/// Point-major cycling order; a twin pair contributes its barycenter then
/// its offset.
fn coordinates(design: &Design) -> Vec<Coord> {
    let d = design.dim();
    let raw_rows = design.twin_rows().map_or(design.n(), |(a, _)| a);
    let mut out: Vec<Coord> = (0..raw_rows)
        .flat_map(|row| (0..d).map(move |k| Coord::Raw { row, k }))
        .collect();
    if design.twin().is_some() {
        out.extend((0..d).map(|k| Coord::Barycenter { k }));
        out.extend((0..d).map(|k| Coord::Delta { k }));
    }
    out
}

fn current_value(design: &Design, c: Coord) -> f64 {
    match c {
        Coord::Raw { row, k } => design.point(row)[k],
        Coord::Barycenter { k } => design.twin().expect("twin").barycenter[k],
        Coord::Delta { k } => design.twin().expect("twin").delta[k],
    }
}

fn bounds(design: &Design, c: Coord) -> (f64, f64) {
    match c {
        Coord::Raw { .. } => (-1.0, 1.0),
        Coord::Barycenter { k } => {
            let reach = 1.0 - design.twin().expect("twin").delta[k].abs();
            (-reach, reach)
        }
        Coord::Delta { k } => {
            let reach = 1.0 - design.twin().expect("twin").barycenter[k].abs();
            (-reach, reach)
        }
    }
}

/// The design with coordinate `c` set to `value`, plus the rows it touches.
fn moved(design: &Design, c: Coord, value: f64) -> Result<(Design, Vec<usize>, usize)> {
    match c {
        Coord::Raw { row, k } => Ok((design.with_coordinate(row, k, value)?, vec![row], k)),
        Coord::Barycenter { k } | Coord::Delta { k } => {
            let twin = design.twin().expect("twin");
            let (mut xt, mut delta) = (twin.barycenter.clone(), twin.delta.clone());
            if matches!(c, Coord::Barycenter { .. }) {
                xt[k] = value;
            } else {
                delta[k] = value;
            }
            let (a, b) = design.twin_rows().expect("twin");
            Ok((design.with_twin_params(xt, delta)?, vec![a, b], k))
        }
    }
}

/// First pair of raw rows within `tol` of each other in every factor.
fn merge_candidate(design: &Design, tol: f64) -> Option<(usize, usize)> {
    if design.twin().is_some() || tol <= 0.0 {
        return None;
    }
    let n = design.n();
    (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .find(|&(i, j)| {
            design
                .point(i)
                .iter()
                .zip(design.point(j))
                .all(|(a, b)| (a - b).abs() < tol)
        })
}

/// Cyclic coordinate descent from `initial`.
///
/// Each coordinate is line-searched over its full feasible range while the
/// others are held fixed; moves are accepted only if they strictly lower the
/// IMSPE. Moves whose evaluation fails (degenerate or beyond the precision
/// ceiling) are treated as infinitely bad.
pub fn ccd_minimize(
    initial: &Design,
    params: &CovarianceParams,
    cfg: &SearchConfig,
    ctx: &PrecisionContext,
) -> Result<SearchResult> {
    cfg.validate()?;
    let mut eval = Evaluator::new(initial, params, ctx)?;
    let mut trace = vec![(0, eval.current().imspe.clone())];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let before = eval.current().imspe.clone();
        let mut max_move: f64 = 0.0;
        let mut merged = false;

        for c in coordinates(eval.design()) {
            let base = eval.design().clone();
            let x0 = current_value(&base, c);
            let (lo, hi) = bounds(&base, c);
            let f0 = eval.current().imspe.clone();
            let best = line_minimize(
                |x| {
                    let (cand, rows, k) = moved(&base, c, x).ok()?;
                    eval.trial(&cand, &rows, k).ok().map(|r| r.imspe)
                },
                lo,
                hi,
                x0,
                f0,
                cfg.line_search_grid,
                cfg.coord_tol,
            );
            if best.x != x0 {
                let (cand, rows, k) = moved(&base, c, best.x)?;
                let result = eval.trial(&cand, &rows, k)?;
                if result.imspe < eval.current().imspe {
                    eval.accept(cand, &rows, k, result)?;
                    max_move = max_move.max((best.x - x0).abs());
                }
            }
            if let Some((i, j)) = merge_candidate(eval.design(), cfg.twin_merge_tol) {
                if try_merge(&mut eval, i, j, cfg.obj_tol)? {
                    // Row indices changed; restart the sweep on the new layout.
                    merged = true;
                    break;
                }
            }
        }

        let after = eval.current().imspe.clone();
        let improvement = (&before - &after).to_f64();
        trace.push((sweeps, after));
        if !merged && max_move < cfg.coord_tol && improvement < cfg.obj_tol {
            converged = true;
            break;
        }
    }

    Ok(SearchResult {
        design: canonicalize(eval.design(), params),
        imspe: eval.current().clone(),
        sweeps,
        converged,
        trace,
        start_index: 0,
    })
}

/// Re-expresses rows `i`, `j` as a twin pair, unless rounding the barycenter
/// and offset raises the IMSPE by more than `slack`.
fn try_merge(eval: &mut Evaluator, i: usize, j: usize, slack: f64) -> Result<bool> {
    let merged = match eval.design().into_twin(i, j) {
        Ok(d) => d,
        Err(_) => return Ok(false),
    };
    let mut trial = eval.clone();
    if trial.reset(merged).is_err() {
        return Ok(false);
    }
    let rise = (&trial.current().imspe - &eval.current().imspe).to_f64();
    if rise > slack {
        return Ok(false);
    }
    *eval = trial;
    Ok(true)
}

/// Portable stream for draw `index` under `seed`: ChaCha8 seeded from the
/// 64-bit seed, with the index selecting the stream.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A design drawn uniformly from `[-1, 1]^(N D)` on stream `index`.
pub fn uniform_design(seed: u64, index: u64, n: usize, d: usize) -> Design {
    let mut rng = stream_rng(seed, index);
    let points = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    Design::new(points).expect("uniform draws lie in the domain")
}

/// Runs [`ccd_minimize`] from `n_starts` uniform designs (start `s` drawn on
/// stream `s` of `cfg.rng_seed`) and returns the best. Starts run on the
/// current rayon pool; the winner is chosen by IMSPE, then by start index.
pub fn multistart(
    n_starts: usize,
    n_points: usize,
    params: &CovarianceParams,
    cfg: &SearchConfig,
    ctx: &PrecisionContext,
) -> Result<SearchResult> {
    let all = multistart_all(n_starts, n_points, params, cfg, ctx)?;
    let mut best: Option<SearchResult> = None;
    let mut first_err = None;
    for r in all {
        match r {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.imspe.imspe < b.imspe.imspe) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or_else(|| Error::InvalidConfig("no starts ran".into())))
}

/// Every start's outcome, in start order.
pub fn multistart_all(
    n_starts: usize,
    n_points: usize,
    params: &CovarianceParams,
    cfg: &SearchConfig,
    ctx: &PrecisionContext,
) -> Result<Vec<Result<SearchResult>>> {
    if n_starts < 1 {
        return Err(Error::InvalidConfig("n_starts must be at least 1".into()));
    }
    if n_points < 1 {
        return Err(Error::InvalidConfig("designs need at least one point".into()));
    }
    cfg.validate()?;
    let d = params.dim();
    Ok((0..n_starts)
        .into_par_iter()
        .map(|s| {
            let start = uniform_design(cfg.rng_seed, s as u64, n_points, d);
            ccd_minimize(&start, params, cfg, ctx).map(|mut r| {
                r.start_index = s;
                r
            })
        })
        .collect())
}
