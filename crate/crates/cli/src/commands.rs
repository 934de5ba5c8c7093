use std::path::{Path, PathBuf};

use imspe_core::search::{multistart_all, random_baseline};
use imspe_core::studies::{
    classify, hue_grid, loglog_slope, phase_boundaries, phase_sweep, rectangle_width_at_level, richardson,
    tornado_data, twin_profile, ClassifyTol, SweepOptions,
};
use imspe_core::{imspe, BigReal, CovarianceParams, Design, PrecisionContext, SearchConfig};
use serde::{Deserialize, Serialize};

use crate::design_io::{fmt_f64, write_design, write_text};
use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, write_manifest};

/// Guard digits carried beyond the printed width.
pub const GUARD_DIGITS: u32 = 10;

/// Trustworthy digits demanded beyond the printed width, so that rounding
/// the printed value is stable.
const CORRECT_MARGIN: u32 = 2;

/// Share of records that must succeed for a data command to exit 0.
const SUCCESS_SHARE: f64 = 0.99;

/// Covariance model and precision shared by every command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Model {
    pub theta: Vec<f64>,
    pub sigma2: f64,
    /// Printed significant digits; the working precision adds guard digits.
    pub digits: u32,
}

impl Model {
    pub fn params(&self) -> CliResult<CovarianceParams> {
        Ok(CovarianceParams::new(self.theta.clone(), self.sigma2)?)
    }

    pub fn ctx(&self) -> CliResult<PrecisionContext> {
        Ok(PrecisionContext::new(self.digits + GUARD_DIGITS)?.with_min_correct(self.digits + CORRECT_MARGIN))
    }

    fn num(&self, x: &BigReal) -> String {
        x.to_sci_string(self.digits)
    }
}

/// Where the reference IMSPE of a gap computation comes from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Value(String),
    Design(Design),
}

impl Reference {
    fn resolve(&self, params: &CovarianceParams, ctx: &PrecisionContext) -> CliResult<BigReal> {
        match self {
            Reference::Value(text) => {
                BigReal::parse(text, ctx).map_err(|_| CliError::Usage(format!("reference {text:?} is not a number")))
            }
            Reference::Design(d) => Ok(imspe(d, params, ctx)?.imspe),
        }
    }
}

fn status_of(ok: usize, total: usize, what: &str) -> CliResult<()> {
    if total == 0 || ok as f64 >= SUCCESS_SHARE * total as f64 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("only {ok} of {total} {what} succeeded")))
    }
}

fn short_error(msg: &str) -> String {
    format!("error: {msg}")
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub model: Model,
    pub design: Design,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    imspe: String,
    digits_used: u32,
    escalations: u32,
    min_pivot: String,
    digits_lost: f64,
    theta: &'a [f64],
    sigma2: f64,
    design: &'a Design,
}

pub fn run_eval(cfg: &EvalConfig) -> CliResult<String> {
    let params = cfg.model.params()?;
    let ctx = cfg.model.ctx()?;
    let r = imspe(&cfg.design, &params, &ctx)?;
    let value = cfg.model.num(&r.imspe);
    if let Some(out) = &cfg.out {
        let s = r.summary(cfg.model.digits);
        let report = EvalReport {
            imspe: s.imspe,
            digits_used: s.digits_used,
            escalations: s.escalations,
            min_pivot: s.min_pivot,
            digits_lost: s.digits_lost,
            theta: &cfg.model.theta,
            sigma2: cfg.model.sigma2,
            design: &cfg.design,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_text(out, &text)?;
        write_manifest(out, "eval", cfg, &[out.clone()])?;
    }
    Ok(value)
}

// ---------------------------------------------------------------- search

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchRunConfig {
    pub model: Model,
    pub n: usize,
    pub starts: usize,
    pub search: SearchConfig,
    pub classify: ClassifyTol,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct StartSummary {
    start: usize,
    imspe: Option<String>,
    sweeps: Option<usize>,
    converged: Option<bool>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SearchReport {
    imspe: String,
    digits_used: u32,
    start_index: usize,
    sweeps: usize,
    converged: bool,
    label: Option<String>,
    design: Design,
    trace: Vec<(usize, String)>,
    starts: Vec<StartSummary>,
}

/// Multistart search; writes the best design (CSV) and a JSON report.
/// Returns the best IMSPE, or a nonconvergence error after writing.
pub fn run_search(cfg: &SearchRunConfig) -> CliResult<String> {
    let params = cfg.model.params()?;
    let ctx = cfg.model.ctx()?;
    let all = multistart_all(cfg.starts, cfg.n, &params, &cfg.search, &ctx)?;
    let starts: Vec<StartSummary> = all
        .iter()
        .enumerate()
        .map(|(start, r)| match r {
            Ok(r) => StartSummary {
                start,
                imspe: Some(cfg.model.num(&r.imspe.imspe)),
                sweeps: Some(r.sweeps),
                converged: Some(r.converged),
                error: None,
            },
            Err(e) => StartSummary {
                start,
                imspe: None,
                sweeps: None,
                converged: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut best = None;
    let mut first_err = None;
    for r in all {
        match r {
            Ok(r) => {
                if best.as_ref().is_none_or(|b: &imspe_core::SearchResult| r.imspe.imspe < b.imspe.imspe) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(first_err.map_or_else(|| CliError::Numerical("no start succeeded".into()), Into::into)),
    };

    let label = if best.design.n() == 4 && best.design.dim() == 2 {
        classify(&best.design, &cfg.classify).ok().map(|l| l.to_string())
    } else {
        None
    };
    let report = SearchReport {
        imspe: cfg.model.num(&best.imspe.imspe),
        digits_used: best.imspe.digits_used,
        start_index: best.start_index,
        sweeps: best.sweeps,
        converged: best.converged,
        label,
        design: best.design.clone(),
        trace: best.trace.iter().map(|(s, v)| (*s, cfg.model.num(v))).collect(),
        starts,
    };
    let json = sidecar(&cfg.out, "json");
    write_design(&cfg.out, &best.design)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_text(&json, &text)?;
    write_manifest(&cfg.out, "search", cfg, &[cfg.out.clone(), json])?;
    if !best.converged {
        return Err(CliError::NonConvergence(format!(
            "best start {} stopped after {} sweeps",
            best.start_index, best.sweeps
        )));
    }
    Ok(report.imspe)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRunConfig {
    pub sigma2: f64,
    pub digits: u32,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub n: usize,
    pub starts: usize,
    pub search: SearchConfig,
    pub classify: ClassifyTol,
    /// IMSPE levels at which the rectangle-phase width is reported.
    pub rectangle_levels: Vec<f64>,
    pub out: PathBuf,
}

pub fn run_sweep(cfg: &SweepRunConfig) -> CliResult<String> {
    if cfg.theta1.is_empty() || cfg.theta2.is_empty() {
        return Err(CliError::Usage("theta1 and theta2 lists must be non-empty".into()));
    }
    let model = Model {
        theta: vec![1.0, 1.0],
        sigma2: cfg.sigma2,
        digits: cfg.digits,
    };
    let base = model.params()?;
    let ctx = model.ctx()?;
    let grid: Vec<(f64, f64)> = cfg
        .theta1
        .iter()
        .flat_map(|&a| cfg.theta2.iter().map(move |&b| (a, b)))
        .collect();
    let opts = SweepOptions {
        n_starts: cfg.starts,
        n_points: cfg.n,
        classify: cfg.classify,
    };
    let records = phase_sweep(&grid, &base, &opts, &cfg.search, &ctx)?;

    let mut w = csv::Writer::from_path(&cfg.out)?;
    let mut header: Vec<String> = ["theta1", "theta2", "imspe", "label"].iter().map(|s| s.to_string()).collect();
    for i in 1..=cfg.n {
        for k in 1..=2 {
            header.push(format!("x{i}_{k}"));
        }
    }
    header.push("status".into());
    w.write_record(&header)?;
    let mut ok = 0;
    for r in &records {
        let mut row = vec![
            fmt_f64(r.theta.0),
            fmt_f64(r.theta.1),
            r.imspe.as_ref().map_or("NaN".into(), |v| model.num(v)),
            r.label.to_string(),
        ];
        match &r.design {
            Some(d) => row.extend(d.points().iter().flatten().map(|x| fmt_f64(*x))),
            None => row.extend(std::iter::repeat_n("NaN".to_string(), 2 * cfg.n)),
        }
        let status = match (&r.design, &r.diagnostics) {
            (Some(_), None) => "ok".to_string(),
            (Some(_), Some(m)) => format!("warning: {m}"),
            (None, m) => short_error(m.as_deref().unwrap_or("failed")),
        };
        if r.design.is_some() {
            ok += 1;
        }
        row.push(status);
        w.write_record(&row)?;
    }
    w.flush()?;

    let bpath = sidecar(&cfg.out, "boundaries.csv");
    let mut b = csv::Writer::from_path(&bpath)?;
    b.write_record(["theta1", "theta2_mid", "below", "above"])?;
    for pb in phase_boundaries(&records) {
        b.write_record([
            fmt_f64(pb.theta1),
            fmt_f64(pb.theta2),
            pb.below.to_string(),
            pb.above.to_string(),
        ])?;
    }
    b.flush()?;
    write_manifest(&cfg.out, "sweep", cfg, &[cfg.out.clone(), bpath])?;

    let mut summary = format!("{} grid points, {ok} searched successfully", records.len());
    for &level in &cfg.rectangle_levels {
        let width = rectangle_width_at_level(&records, level);
        summary.push_str(&format!(
            "\nrectangle width at IMSPE {}: {}",
            fmt_f64(level),
            width.map_or("none".into(), fmt_f64)
        ));
    }
    status_of(ok, records.len(), "grid points")?;
    Ok(summary)
}

// ---------------------------------------------------------------- baseline / tornado

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineRunConfig {
    pub model: Model,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub reference: Reference,
    pub out: PathBuf,
}

pub fn run_baseline(cfg: &BaselineRunConfig) -> CliResult<String> {
    let params = cfg.model.params()?;
    let ctx = cfg.model.ctx()?;
    let reference = cfg.reference.resolve(&params, &ctx)?;
    let report = random_baseline(cfg.samples, cfg.n, &params, &reference, cfg.seed, &ctx)?;

    let mut w = csv::Writer::from_path(&cfg.out)?;
    w.write_record(["sample_index", "imspe", "gap", "status"])?;
    for r in &report.records {
        match (&r.imspe, &r.gap) {
            (Some(v), Some(g)) => w.write_record([r.index.to_string(), cfg.model.num(v), cfg.model.num(g), "ok".into()])?,
            _ => w.write_record([
                r.index.to_string(),
                "NaN".into(),
                "NaN".into(),
                short_error(r.error.as_deref().unwrap_or("failed")),
            ])?,
        }
    }
    w.flush()?;
    write_manifest(&cfg.out, "baseline", cfg, &[cfg.out.clone()])?;

    let mut summary = format!(
        "reference {}\nsamples {}, below reference {}, skipped {}\nmin gap {}",
        cfg.model.num(&reference),
        report.records.len(),
        report.count_below,
        report.skipped,
        report.min_gap.as_ref().map_or("none".into(), |g| cfg.model.num(g))
    );
    if report.histogram.nonpositive > 0 {
        summary.push_str(&format!("\ngap <= 0: {}", report.histogram.nonpositive));
    }
    for (decade, count) in &report.histogram.decades {
        summary.push_str(&format!("\ngap in [1e{decade}, 1e{}): {count}", decade + 1));
    }
    status_of(report.records.len() - report.skipped, report.records.len(), "samples")?;
    Ok(summary)
}

pub fn run_tornado(cfg: &BaselineRunConfig) -> CliResult<String> {
    let params = cfg.model.params()?;
    let ctx = cfg.model.ctx()?;
    let reference = cfg.reference.resolve(&params, &ctx)?;
    let report = random_baseline(cfg.samples, cfg.n, &params, &reference, cfg.seed, &ctx)?;
    let points = tornado_data(&report, &reference);

    let mut w = csv::Writer::from_path(&cfg.out)?;
    w.write_record(["sample_index", "d", "gap", "status"])?;
    let mut ok = 0;
    for (p, r) in points.iter().zip(&report.records) {
        let status = match &r.error {
            Some(e) => short_error(e),
            None if p.gap.is_nan() => "error: not above the reference".into(),
            None => {
                ok += 1;
                "ok".into()
            }
        };
        w.write_record([p.index.to_string(), fmt_f64(p.d), fmt_f64(p.gap), status])?;
    }
    w.flush()?;
    write_manifest(&cfg.out, "tornado", cfg, &[cfg.out.clone()])?;
    status_of(ok, points.len(), "samples")?;
    Ok(format!("{} samples, {ok} above the reference", points.len()))
}

// ---------------------------------------------------------------- profile

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRunConfig {
    pub model: Model,
    pub design: Design,
    pub axis: usize,
    pub deltas: Vec<f64>,
    pub out: PathBuf,
}

pub fn run_profile(cfg: &ProfileRunConfig) -> CliResult<String> {
    let params = cfg.model.params()?;
    let ctx = cfg.model.ctx()?;
    let mut deltas = cfg.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let points = twin_profile(&cfg.design, &params, cfg.axis, &deltas, &ctx)?;

    let mut w = csv::Writer::from_path(&cfg.out)?;
    w.write_record(["axis", "delta", "imspe", "status"])?;
    for p in &points {
        w.write_record([p.axis.to_string(), fmt_f64(p.delta), cfg.model.num(&p.imspe), "ok".into()])?;
    }
    w.flush()?;
    write_manifest(&cfg.out, "profile", cfg, &[cfg.out.clone()])?;

    let mut summary = format!("{} offsets along x{}", points.len(), cfg.axis);
    if points.len() >= 3 {
        let fit = richardson(&points[..3], &ctx)?;
        summary.push_str(&format!(
            "\nlimit {}\nquadratic coefficient {}",
            cfg.model.num(&fit.limit),
            cfg.model.num(&fit.c2)
        ));
        if let Ok(s) = loglog_slope(&points, &fit.limit) {
            summary.push_str(&format!("\nlog-log slope {s:.6}"));
        }
    }
    Ok(summary)
}

// ---------------------------------------------------------------- hue

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HueRunConfig {
    pub model: Model,
    pub design: Design,
    pub grid_n: usize,
    pub reference: Reference,
    pub out: PathBuf,
}

pub fn run_hue(cfg: &HueRunConfig) -> CliResult<String> {
    let params = cfg.model.params()?;
    let ctx = cfg.model.ctx()?;
    let reference = cfg.reference.resolve(&params, &ctx)?;
    let nodes = hue_grid(&cfg.design, &params, cfg.grid_n, &reference, &ctx)?;

    let mut w = csv::Writer::from_path(&cfg.out)?;
    w.write_record(["u", "v", "gap", "status"])?;
    let mut ok = 0;
    for n in &nodes {
        let status = if n.gap.is_nan() {
            "error: evaluation failed".to_string()
        } else {
            ok += 1;
            "ok".to_string()
        };
        w.write_record([fmt_f64(n.u), fmt_f64(n.v), fmt_f64(n.gap), status])?;
    }
    w.flush()?;
    write_manifest(&cfg.out, "hue", cfg, &[cfg.out.clone()])?;
    status_of(ok, nodes.len(), "grid nodes")?;
    Ok(format!("{} nodes, {ok} evaluated", nodes.len()))
}

pub fn replay(command: &str, config: serde_json::Value, out: Option<&Path>) -> CliResult<String> {
    fn load<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> CliResult<T> {
        serde_json::from_value(v).map_err(|e| CliError::Parse(format!("manifest config: {e}")))
    }
    let redirect = |p: &mut PathBuf| {
        if let Some(o) = out {
            *p = o.to_path_buf();
        }
    };
    match command {
        "eval" => {
            let mut c: EvalConfig = load(config)?;
            if let Some(o) = out {
                c.out = Some(o.to_path_buf());
            }
            run_eval(&c)
        }
        "search" => {
            let mut c: SearchRunConfig = load(config)?;
            redirect(&mut c.out);
            run_search(&c)
        }
        "sweep" => {
            let mut c: SweepRunConfig = load(config)?;
            redirect(&mut c.out);
            run_sweep(&c)
        }
        "baseline" => {
            let mut c: BaselineRunConfig = load(config)?;
            redirect(&mut c.out);
            run_baseline(&c)
        }
        "tornado" => {
            let mut c: BaselineRunConfig = load(config)?;
            redirect(&mut c.out);
            run_tornado(&c)
        }
        "profile" => {
            let mut c: ProfileRunConfig = load(config)?;
            redirect(&mut c.out);
            run_profile(&c)
        }
        "hue" => {
            let mut c: HueRunConfig = load(config)?;
            redirect(&mut c.out);
            run_hue(&c)
        }
        other => Err(CliError::Parse(format!("unknown command {other:?} in manifest"))),
    }
}
