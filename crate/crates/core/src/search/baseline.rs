use std::collections::BTreeMap;

use rayon::prelude::*;

use super::uniform_design;
use crate::error::{Error, Result};
use crate::highprec::{BigReal, PrecisionContext};
use crate::imspe::imspe;
use crate::kernel::{CovarianceParams, Design};

#[derive(Debug, Clone)]
pub struct BaselineRecord {
    pub index: usize,
    pub design: Design,
    pub imspe: Option<BigReal>,
    /// `imspe - reference`, unscaled.
    pub gap: Option<BigReal>,
    pub error: Option<String>,
}

/// Counts of positive gaps per decade (`floor(log10 gap)`), plus the
/// non-positive ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapHistogram {
    pub nonpositive: usize,
    pub decades: BTreeMap<i32, usize>,
}

impl GapHistogram {
    pub fn total(&self) -> usize {
        self.nonpositive + self.decades.values().sum::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub reference: BigReal,
    pub records: Vec<BaselineRecord>,
    /// Samples with IMSPE strictly below the reference.
    pub count_below: usize,
    pub min_gap: Option<BigReal>,
    pub histogram: GapHistogram,
    /// Samples whose evaluation failed.
    pub skipped: usize,
}

/// Evaluates `n_samples` uniform designs (sample `i` drawn on stream `i` of
/// `seed`) against `reference_imspe`.
pub fn random_baseline(
    n_samples: usize,
    n_points: usize,
    params: &CovarianceParams,
    reference_imspe: &BigReal,
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<BaselineReport> {
    if n_samples < 1 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    let d = params.dim();
    let designs: Vec<Design> = (0..n_samples)
        .map(|i| uniform_design(seed, i as u64, n_points, d))
        .collect();
    baseline_from_designs(designs, params, reference_imspe, ctx)
}

/// Baseline statistics over an explicit list of designs.
pub fn baseline_from_designs(
    designs: Vec<Design>,
    params: &CovarianceParams,
    reference_imspe: &BigReal,
    ctx: &PrecisionContext,
) -> Result<BaselineReport> {
    let records: Vec<BaselineRecord> = designs
        .into_par_iter()
        .enumerate()
        .map(|(index, design)| match imspe(&design, params, ctx) {
            Ok(r) => {
                let gap = &r.imspe - reference_imspe;
                BaselineRecord {
                    index,
                    design,
                    imspe: Some(r.imspe),
                    gap: Some(gap),
                    error: None,
                }
            }
            Err(e) => BaselineRecord {
                index,
                design,
                imspe: None,
                gap: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut histogram = GapHistogram::default();
    let mut count_below = 0;
    let mut skipped = 0;
    let mut min_gap: Option<BigReal> = None;
    for rec in &records {
        let Some(gap) = &rec.gap else {
            skipped += 1;
            continue;
        };
        if *gap < 0.0 {
            count_below += 1;
        }
        if *gap > 0.0 {
            *histogram.decades.entry(gap.log10_abs().floor() as i32).or_default() += 1;
        } else {
            histogram.nonpositive += 1;
        }
        if min_gap.as_ref().is_none_or(|m| gap < m) {
            min_gap = Some(gap.clone());
        }
    }
    Ok(BaselineReport {
        reference: reference_imspe.clone(),
        records,
        count_below,
        min_gap,
        histogram,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_reference_sample_has_zero_gap() {
        let ctx = PrecisionContext::new(60).unwrap();
        let p = CovarianceParams::unit(vec![0.128, 0.00016]).unwrap();
        let rwt = Design::with_twin(
            vec![vec![-0.767117, 0.0], vec![0.767117, 0.0]],
            vec![0.0, 0.0],
            vec![0.0, 1e-6],
        )
        .unwrap();
        let reference = imspe(&rwt, &p, &ctx).unwrap().imspe;
        let report = baseline_from_designs(vec![rwt], &p, &reference, &ctx).unwrap();
        assert_eq!(report.count_below, 0);
        assert!(report.min_gap.unwrap().is_zero());
        assert_eq!(report.histogram.nonpositive, 1);
    }

    #[test]
    fn failures_are_counted_not_fatal() {
        let ctx = PrecisionContext::new(30).unwrap();
        let p = CovarianceParams::unit(vec![1.0, 1.0]).unwrap();
        let ok = Design::new(vec![vec![0.1, 0.1], vec![-0.5, 0.3]]).unwrap();
        let dup = Design::new(vec![vec![0.1, 0.1], vec![0.1, 0.1]]).unwrap();
        let reference = BigReal::zero(&ctx);
        let report = baseline_from_designs(vec![ok, dup], &p, &reference, &ctx).unwrap();
        assert_eq!(report.skipped, 1);
        assert!(report.records[1].error.is_some());
        assert_eq!(report.histogram.total(), 2 - report.skipped);
    }

    #[test]
    fn seeded_baseline_is_deterministic() {
        let ctx = PrecisionContext::new(30).unwrap();
        let p = CovarianceParams::unit(vec![0.5, 0.5]).unwrap();
        let reference = BigReal::zero(&ctx);
        let a = random_baseline(5, 3, &p, &reference, 42, &ctx).unwrap();
        let b = random_baseline(5, 3, &p, &reference, 42, &ctx).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.design, y.design);
            assert_eq!(x.imspe, y.imspe);
        }
        assert!(random_baseline(0, 3, &p, &reference, 42, &ctx).is_err());
    }
}
