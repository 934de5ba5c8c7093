//! IMSPE = IMSE / sigma_z^2 = 1 - tr(L^-1 R), evaluated with precision
//! escalation.
//!
//! Proximal points make `L` nearly singular and the trace a difference of
//! huge, almost equal terms. Each evaluation estimates the decimal digits
//! lost (condition estimate of the factorization times the largest trace
//! summand relative to the result) and retries at a higher precision when
//! more than half of the working digits are gone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::highprec::{BigReal, LuFactor, Matrix, PrecisionContext};
use crate::kernel::{CovarianceParams, Design, KernelTables};

/// Additive floor of the log-gap transform.
pub const GAP_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone)]
pub struct ImspeResult {
    pub imspe: BigReal,
    pub digits_used: u32,
    pub escalations: u32,
    pub min_pivot: f64,
    /// Estimated decimal digits lost to conditioning and cancellation.
    pub digits_lost: f64,
}

impl ImspeResult {
    pub fn value(&self) -> f64 {
        self.imspe.to_f64()
    }

    pub fn summary(&self, digits: u32) -> ImspeSummary {
        ImspeSummary {
            imspe: self.imspe.to_sci_string(digits),
            digits_used: self.digits_used,
            escalations: self.escalations,
            min_pivot: format!("{:.6e}", self.min_pivot),
            digits_lost: (self.digits_lost * 100.0).round() / 100.0,
        }
    }
}

/// Text form of an [`ImspeResult`] for JSON output.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ImspeSummary {
    pub imspe: String,
    pub digits_used: u32,
    pub escalations: u32,
    pub min_pivot: String,
    pub digits_lost: f64,
}

/// One evaluation at a fixed precision.
#[derive(Debug, Clone)]
struct Attempt {
    imspe: BigReal,
    min_pivot: f64,
    digits_lost: f64,
}

impl Attempt {
    fn trustworthy(&self, ctx: &PrecisionContext) -> bool {
        let digits = ctx.digits() as f64;
        self.imspe > 0.0 && self.digits_lost <= digits / 2.0 && digits - self.digits_lost >= ctx.min_correct() as f64
    }
}

fn evaluate_matrices(l: &Matrix, r: &Matrix, ctx: &PrecisionContext) -> Result<Attempt> {
    let lu = LuFactor::new(l, ctx)?;
    let x = lu.solve(r);
    let trace = x.trace();
    let max_summand = (0..x.rows())
        .map(|i| x.get(i, i).abs().to_f64())
        .fold(1.0, f64::max);
    let imspe = &BigReal::one(ctx) - &trace;
    let digits_lost = if imspe > 0.0 {
        lu.condition_estimate().log10() + max_summand.log10() - imspe.log10_abs()
    } else {
        f64::INFINITY
    };
    Ok(Attempt {
        imspe,
        min_pivot: lu.min_pivot(),
        digits_lost,
    })
}

fn attempt(design: &Design, unit: &CovarianceParams, ctx: &PrecisionContext) -> Result<Attempt> {
    let tables = KernelTables::new(design, unit, ctx)?;
    let (l, r) = tables.matrices();
    evaluate_matrices(&l, &r, ctx)
}

fn check_evaluable(design: &Design, params: &CovarianceParams) -> Result<()> {
    params.check_design(design)?;
    if let Some((i, j)) = design.exact_duplicate() {
        return Err(Error::DegenerateDesign(i + 1, j + 1));
    }
    Ok(())
}

/// Escalating evaluation starting at `ctx`, with `escalations` already spent.
fn escalate_from(
    design: &Design,
    unit: &CovarianceParams,
    ctx: &PrecisionContext,
    mut escalations: u32,
) -> Result<ImspeResult> {
    let mut current = *ctx;
    loop {
        let outcome = attempt(design, unit, &current);
        let (min_pivot, digits_lost) = match &outcome {
            Ok(a) if a.trustworthy(&current) => {
                return Ok(ImspeResult {
                    imspe: a.imspe.clone(),
                    digits_used: current.digits(),
                    escalations,
                    min_pivot: a.min_pivot,
                    digits_lost: a.digits_lost,
                })
            }
            Ok(a) => (a.min_pivot, a.digits_lost),
            Err(Error::Singular { pivot, .. }) => (*pivot, f64::INFINITY),
            Err(e) => return Err(e.clone()),
        };
        match current.escalate() {
            Some(next) => {
                current = next;
                escalations += 1;
            }
            None => {
                return Err(Error::IllConditioned {
                    digits: current.digits(),
                    escalations,
                    min_pivot,
                    digits_lost,
                })
            }
        }
    }
}

/// IMSPE of `design`, normalized by the process variance.
///
/// The ratio IMSE / sigma_z^2 does not depend on sigma_z^2, so the matrices
/// are assembled at unit variance.
pub fn imspe(design: &Design, params: &CovarianceParams, ctx: &PrecisionContext) -> Result<ImspeResult> {
    check_evaluable(design, params)?;
    escalate_from(design, &params.with_unit_variance(), ctx, 0)
}

/// `log10(imspe - reference + 1e-16)`.
pub fn imspe_gap(
    design: &Design,
    params: &CovarianceParams,
    reference_imspe: &BigReal,
    ctx: &PrecisionContext,
) -> Result<BigReal> {
    let result = imspe(design, params, ctx)?;
    log_gap(&result.imspe, reference_imspe, ctx)
}

/// The shifted log-gap transform on an already computed value.
pub fn log_gap(value: &BigReal, reference: &BigReal, ctx: &PrecisionContext) -> Result<BigReal> {
    let shifted = &(value - reference) + &BigReal::parse("1e-16", ctx)?;
    if !(shifted > 0.0) {
        return Err(Error::Domain(format!(
            "IMSPE {} lies below the reference {} by more than the floor",
            value.to_sci_string(12),
            reference.to_sci_string(12)
        )));
    }
    Ok(shifted.log10(ctx))
}

/// Reusable evaluator for designs that differ from a base design in one
/// coordinate at a time.
///
/// Precision only ratchets upward: when a trial needs escalation, the base
/// tables are rebuilt at the higher precision and later trials start there.
#[derive(Clone, Debug)]
pub struct Evaluator {
    params: CovarianceParams,
    ctx: PrecisionContext,
    design: Design,
    tables: KernelTables,
    current: ImspeResult,
}

impl Evaluator {
    pub fn new(design: &Design, params: &CovarianceParams, ctx: &PrecisionContext) -> Result<Self> {
        check_evaluable(design, params)?;
        let unit = params.with_unit_variance();
        let current = escalate_from(design, &unit, ctx, 0)?;
        let work = ctx.at_digits(current.digits_used);
        let tables = KernelTables::new(design, &unit, &work)?;
        Ok(Self {
            params: unit,
            ctx: work,
            design: design.clone(),
            tables,
            current,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn current(&self) -> &ImspeResult {
        &self.current
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    /// Evaluates `candidate`, which differs from the base design only in
    /// factor `k` of `rows`.
    pub fn trial(&mut self, candidate: &Design, rows: &[usize], k: usize) -> Result<ImspeResult> {
        check_evaluable(candidate, &self.params)?;
        let mut tables = self.tables.clone();
        tables.update(candidate, rows, k);
        let (l, r) = tables.matrices();
        match evaluate_matrices(&l, &r, &self.ctx) {
            Ok(a) if a.trustworthy(&self.ctx) => Ok(ImspeResult {
                imspe: a.imspe,
                digits_used: self.ctx.digits(),
                escalations: 0,
                min_pivot: a.min_pivot,
                digits_lost: a.digits_lost,
            }),
            Ok(_) | Err(Error::Singular { .. }) => {
                let next = self.ctx.escalate().ok_or_else(|| Error::IllConditioned {
                    digits: self.ctx.digits(),
                    escalations: 0,
                    min_pivot: 0.0,
                    digits_lost: f64::INFINITY,
                })?;
                let result = escalate_from(candidate, &self.params, &next, 1)?;
                self.raise_precision(result.digits_used)?;
                Ok(result)
            }
            Err(e) => Err(e),
        }
    }

    fn raise_precision(&mut self, digits: u32) -> Result<()> {
        if digits > self.ctx.digits() {
            self.ctx = self.ctx.at_digits(digits);
            self.tables = KernelTables::new(&self.design, &self.params, &self.ctx)?;
        }
        Ok(())
    }

    /// Makes `candidate` the new base design.
    pub fn accept(&mut self, candidate: Design, rows: &[usize], k: usize, result: ImspeResult) -> Result<()> {
        self.raise_precision(result.digits_used)?;
        self.tables.update(&candidate, rows, k);
        self.design = candidate;
        self.current = result;
        Ok(())
    }

    /// Replaces the base design wholesale (e.g. after re-parameterizing a
    /// twin pair).
    pub fn reset(&mut self, design: Design) -> Result<()> {
        check_evaluable(&design, &self.params)?;
        let result = escalate_from(&design, &self.params, &self.ctx, 0)?;
        self.ctx = self.ctx.at_digits(result.digits_used);
        self.tables = KernelTables::new(&design, &self.params, &self.ctx)?;
        self.design = design;
        self.current = result;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(d: u32) -> PrecisionContext {
        PrecisionContext::new(d).unwrap()
    }

    fn rwt(delta: f64) -> Design {
        Design::with_twin(
            vec![vec![-0.767117, 0.0], vec![0.767117, 0.0]],
            vec![0.0, 0.0],
            vec![0.0, delta],
        )
        .unwrap()
    }

    fn rwt_params() -> CovarianceParams {
        CovarianceParams::unit(vec![0.128, 0.00016]).unwrap()
    }

    #[test]
    fn min_correct_forces_escalation() {
        let plain = imspe(&rwt(1e-6), &rwt_params(), &ctx(40)).unwrap();
        assert_eq!(plain.digits_used, 40);
        let strict = imspe(&rwt(1e-6), &rwt_params(), &ctx(40).with_min_correct(30)).unwrap();
        assert!(strict.digits_used > 40);
        assert!(strict.digits_used as f64 - strict.digits_lost >= 30.0);
        let truth = imspe(&rwt(1e-6), &rwt_params(), &ctx(120)).unwrap();
        assert!((&(&strict.imspe - &truth.imspe) / &truth.imspe).abs() < 1e-30);
    }

    #[test]
    fn rwt_value() {
        let r = imspe(&rwt(1e-6), &rwt_params(), &ctx(60)).unwrap();
        let v = r.value();
        // 6.68211e-5 to six significant figures.
        assert!((v - 6.68211e-5).abs() < 0.5e-10, "{v:e}");
        assert!(r.digits_used >= 60);
    }

    #[test]
    fn exact_duplicates_rejected() {
        let d = Design::new(vec![vec![0.2, 0.1], vec![0.2, 0.1]]).unwrap();
        let p = CovarianceParams::unit(vec![1.0, 1.0]).unwrap();
        assert_eq!(imspe(&d, &p, &ctx(60)).unwrap_err(), Error::DegenerateDesign(1, 2));
        assert!(matches!(imspe(&rwt(0.0), &rwt_params(), &ctx(60)), Err(Error::DegenerateDesign(3, 4))));
    }

    #[test]
    fn near_coincident_points_are_allowed() {
        let d = Design::new(vec![vec![0.2, 0.1], vec![0.2, 0.1 + 1e-9], vec![-0.5, -0.5]]).unwrap();
        let p = CovarianceParams::unit(vec![1.0, 1.0]).unwrap();
        let r = imspe(&d, &p, &ctx(60)).unwrap();
        assert!(r.imspe > 0.0 && r.imspe < 1.0);
    }

    #[test]
    fn value_independent_of_process_variance() {
        let d = Design::new(vec![vec![0.2, 0.1], vec![-0.4, 0.6], vec![0.7, -0.3]]).unwrap();
        let a = imspe(&d, &CovarianceParams::new(vec![2.0, 3.0], 1.0).unwrap(), &ctx(40)).unwrap();
        let b = imspe(&d, &CovarianceParams::new(vec![2.0, 3.0], 7.5).unwrap(), &ctx(40)).unwrap();
        assert_eq!(a.imspe, b.imspe);
    }

    #[test]
    fn permutation_invariance() {
        let d = Design::new(vec![vec![0.2, 0.1], vec![-0.4, 0.6], vec![0.7, -0.3], vec![0.0, -0.9]]).unwrap();
        let p = CovarianceParams::unit(vec![0.5, 1.5]).unwrap();
        let c = ctx(60);
        let base = imspe(&d, &p, &c).unwrap().imspe;
        let perm = imspe(&d.permute_rows(&[3, 1, 0, 2]).unwrap(), &p, &c).unwrap().imspe;
        assert!(((&base - &perm) / &base).abs() < 1e-50);
    }

    #[test]
    fn gap_floor() {
        let c = ctx(60);
        let p = rwt_params();
        let reference = imspe(&rwt(1e-6), &p, &c).unwrap().imspe;
        let gap = imspe_gap(&rwt(1e-6), &p, &reference, &c).unwrap();
        assert!((gap.to_f64() + 16.0).abs() < 1e-12);
        let value = &reference + &BigReal::parse("1e-5", &c).unwrap();
        let g = log_gap(&value, &reference, &c).unwrap().to_f64();
        assert!((g - (1e-5f64 + 1e-16).log10()).abs() < 1e-12);
        let below = &reference - &BigReal::parse("1e-3", &c).unwrap();
        assert!(log_gap(&below, &reference, &c).is_err());
    }

    #[test]
    fn small_precision_escalates_near_twins() {
        let c = PrecisionContext::with_limits(16, 960, 2).unwrap();
        let r = imspe(&rwt(1e-6), &rwt_params(), &c).unwrap();
        assert!(r.escalations > 0);
        assert!(r.digits_used > 16);
    }

    #[test]
    fn ceiling_produces_ill_conditioned_error() {
        let c = PrecisionContext::with_limits(16, 16, 2).unwrap();
        let err = imspe(&rwt(1e-10), &rwt_params(), &c).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { digits: 16, .. }), "{err:?}");
    }

    #[test]
    fn evaluator_trial_matches_direct_evaluation() {
        let p = rwt_params();
        let c = ctx(60);
        let base = Design::new(vec![vec![0.3, 0.1], vec![-0.6, 0.5], vec![0.7, -0.3], vec![0.1, -0.8]]).unwrap();
        let mut ev = Evaluator::new(&base, &p, &c).unwrap();
        let cand = base.with_coordinate(2, 1, 0.45).unwrap();
        let t = ev.trial(&cand, &[2], 1).unwrap();
        let direct = imspe(&cand, &p, &ctx(t.digits_used)).unwrap();
        assert!(((&t.imspe - &direct.imspe) / &direct.imspe).abs() < 1e-25);
    }
}
