mod commands;
mod design_io;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imspe_core::studies::ClassifyTol;
use imspe_core::SearchConfig;

use commands::*;
use design_io::read_design;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "imspe-lab", version, about = "High-precision IMSPE evaluation and design search")]
struct Cli {
    /// Worker threads for independent evaluations.
    #[arg(long, global = true, env = "IMSPE_LAB_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the IMSPE of a design file.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        design: DesignArgs,
        /// JSON result with diagnostics.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multistart coordinate-descent search for an optimal design.
    Search {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of design points.
        #[arg(long)]
        n: usize,
        /// Number of factors (must match --theta).
        #[arg(long)]
        d: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        classify: ClassifyArgs,
        /// Best design as CSV; a JSON report is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Phase sweep over a rectangular (theta1, theta2) grid.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        theta1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        theta2: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 20)]
        digits: u32,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        classify: ClassifyArgs,
        /// IMSPE levels at which to report the rectangle-phase width.
        #[arg(long, value_delimiter = ',')]
        rectangle_levels: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// IMSPE of uniformly random designs against a reference.
    Baseline {
        #[command(flatten)]
        baseline: BaselineArgs,
    },
    /// Random designs as (d, log10 gap) pairs.
    Tornado {
        #[command(flatten)]
        baseline: BaselineArgs,
    },
    /// IMSPE as a function of twin separation along one axis.
    Profile {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        design: DesignArgs,
        /// 1-based axis of separation.
        #[arg(long)]
        axis: usize,
        /// Twin half-separations.
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Log gap over a grid of twin positions.
    Hue {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        grid_n: usize,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a command from its manifest.
    Replay {
        manifest: PathBuf,
        /// Write the primary output here instead of the recorded path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Correlation parameters, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    theta: Vec<f64>,
    /// Process variance.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Significant digits printed; the working precision adds guard digits.
    #[arg(long, default_value_t = 20)]
    digits: u32,
}

impl ModelArgs {
    fn resolve(&self) -> CliResult<Model> {
        if !(1..=900).contains(&self.digits) {
            return Err(CliError::Usage("--digits must lie in 1..=900".into()));
        }
        Ok(Model {
            theta: self.theta.clone(),
            sigma2: self.sigma2,
            digits: self.digits,
        })
    }
}

#[derive(Args)]
struct DesignArgs {
    /// Design CSV file.
    #[arg(long)]
    design: PathBuf,
    /// Barycenter of a twin pair appended to the design.
    #[arg(long, value_delimiter = ',', requires = "twin_delta")]
    twin_barycenter: Option<Vec<f64>>,
    /// Offset of the appended twin pair from its barycenter.
    #[arg(long, value_delimiter = ',', requires = "twin_barycenter")]
    twin_delta: Option<Vec<f64>>,
}

impl DesignArgs {
    fn load(&self) -> CliResult<imspe_core::Design> {
        let twin = self.twin_barycenter.clone().zip(self.twin_delta.clone());
        read_design(&self.design, twin)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 16)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 1e-10)]
    coord_tol: f64,
    #[arg(long, default_value_t = 1e-20)]
    obj_tol: f64,
    /// Points in the bracketing scan of each line search.
    #[arg(long, default_value_t = 33)]
    line_grid: usize,
    /// Points closer than this in every factor become a twin pair.
    #[arg(long, default_value_t = 1e-8)]
    merge_tol: f64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            coord_tol: self.coord_tol,
            obj_tol: self.obj_tol,
            max_sweeps: self.max_sweeps,
            line_search_grid: self.line_grid,
            rng_seed: self.seed,
            twin_merge_tol: self.merge_tol,
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    /// Coordinate tolerance of the phase classifier.
    #[arg(long, default_value_t = 1e-5)]
    class_tol: f64,
    /// Separation below which two points count as twins.
    #[arg(long, default_value_t = 1e-3)]
    twin_tol: f64,
}

impl ClassifyArgs {
    fn tol(&self) -> ClassifyTol {
        ClassifyTol {
            tol: self.class_tol,
            twin_tol: self.twin_tol,
        }
    }
}

#[derive(Args)]
struct ReferenceArgs {
    /// Reference IMSPE value.
    #[arg(long, conflicts_with = "reference_design")]
    reference: Option<String>,
    /// Design file whose IMSPE is the reference.
    #[arg(long)]
    reference_design: Option<PathBuf>,
}

impl ReferenceArgs {
    fn resolve(&self) -> CliResult<Reference> {
        match (&self.reference, &self.reference_design) {
            (Some(v), None) => Ok(Reference::Value(v.clone())),
            (None, Some(p)) => Ok(Reference::Design(read_design(p, None)?)),
            _ => Err(CliError::Usage("give --reference or --reference-design".into())),
        }
    }
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    reference: ReferenceArgs,
    #[arg(long)]
    out: PathBuf,
}

impl BaselineArgs {
    fn config(&self) -> CliResult<BaselineRunConfig> {
        Ok(BaselineRunConfig {
            model: self.model.resolve()?,
            n: self.n,
            samples: self.samples,
            seed: self.seed,
            reference: self.reference.resolve()?,
            out: self.out.clone(),
        })
    }
}

fn dispatch(command: Command) -> CliResult<String> {
    match command {
        Command::Eval { model, design, out } => run_eval(&EvalConfig {
            model: model.resolve()?,
            design: design.load()?,
            out,
        }),
        Command::Search {
            model,
            n,
            d,
            search,
            classify,
            out,
        } => {
            if d.is_some_and(|d| d != model.theta.len()) {
                return Err(CliError::Usage(format!(
                    "--d {} does not match the {} values of --theta",
                    d.unwrap_or(0),
                    model.theta.len()
                )));
            }
            run_search(&SearchRunConfig {
                model: model.resolve()?,
                n,
                starts: search.starts,
                search: search.config(),
                classify: classify.tol(),
                out,
            })
        }
        Command::Sweep {
            theta1,
            theta2,
            sigma2,
            digits,
            n,
            search,
            classify,
            rectangle_levels,
            out,
        } => run_sweep(&SweepRunConfig {
            sigma2,
            digits,
            theta1,
            theta2,
            n,
            starts: search.starts,
            search: search.config(),
            classify: classify.tol(),
            rectangle_levels,
            out,
        }),
        Command::Baseline { baseline } => run_baseline(&baseline.config()?),
        Command::Tornado { baseline } => run_tornado(&baseline.config()?),
        Command::Profile {
            model,
            design,
            axis,
            deltas,
            out,
        } => run_profile(&ProfileRunConfig {
            model: model.resolve()?,
            design: design.load()?,
            axis,
            deltas,
            out,
        }),
        Command::Hue {
            model,
            design,
            grid_n,
            reference,
            out,
        } => run_hue(&HueRunConfig {
            model: model.resolve()?,
            design: design.load()?,
            grid_n,
            reference: reference.resolve()?,
            out,
        }),
        Command::Replay { manifest, out } => {
            let m = manifest::read_manifest(&manifest)?;
            replay(&m.command, m.config, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("usage error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("i/o error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("imspe-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
