//! `salo`: run, compare and inspect optimizers from the command line.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 a run diverged,
//! 3 I/O error.

mod config_file;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use salo_core::fuzzy::check_monotonicity;
use salo_core::harness::{
    self, compare, fd_report_csv, fuzzy_table, run_experiment, summary_table, write_text, ExperimentConfig,
    OptimizerSettings, ProblemSpec, SchedulerSpec, DEFAULT_R_SWEEP,
};
use salo_core::scheduler::{Cadence, ScheduleMode};
use salo_core::{Error, LookupTable, OptimizerKind};

#[derive(Parser)]
#[command(name = "salo", version, about = "Diagonal-Hessian optimizer experiments", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one optimizer on one problem and write its CSV trace.
    Run {
        #[arg(long)]
        optimizer: String,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Run several optimizers on the same problem.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "sgd,adam,adamw,salo")]
        optimizers: Vec<String>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Finite-difference Hessian diagonal error against the analytic one.
    CheckHessian {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Comma-separated step sizes; empty for none. Defaults to 1e-2 .. 1e-10.
        #[arg(long = "r")]
        r: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Precompute the scheduler's lookup table as CSV.
    FuzzyTable {
        #[arg(long)]
        out: PathBuf,
        /// Grid size as `LOSSxITER`.
        #[arg(long, default_value = "61x61")]
        dims: String,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Run length the iteration sets are scaled to.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Re-read the written file and check lr monotonicity.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    problem: String,
    /// Starting point (or evaluation point for check-hessian), comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    point: Option<Vec<f64>>,
    /// Quadratic coefficients.
    #[arg(long, value_delimiter = ',')]
    coeffs: Option<Vec<f64>>,
    /// Ill-conditioned quadratic dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Ill-conditioned quadratic condition number.
    #[arg(long)]
    condition: Option<f64>,
    /// MLP layer sizes.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// Spiral dataset size.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct ExpArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value = "off")]
    scheduler: String,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    beta3: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    hess_floor: Option<f64>,
    #[arg(long)]
    step_cap: Option<f64>,
    #[arg(long)]
    lr_scale: Option<f64>,
    /// `step` or `epoch`.
    #[arg(long)]
    cadence: Option<String>,
    #[arg(long)]
    table_dims: Option<String>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_dims(s: &str) -> Result<(usize, usize), Error> {
    let bad = || usage(format!("dims must look like 61x61, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl ProblemArgs {
    fn spec(&self) -> Result<ProblemSpec, Error> {
        let mut spec = ProblemSpec::from_id(&self.problem)?;
        let misplaced = |flag: &str| usage(format!("--{flag} does not apply to problem `{}`", self.problem));
        match &mut spec {
            ProblemSpec::Quadratic { coeffs } => {
                if let Some(c) = &self.coeffs {
                    *coeffs = c.clone();
                }
            }
            ProblemSpec::IllConditioned { dim, condition } => {
                *dim = self.dim.unwrap_or(*dim);
                *condition = self.condition.unwrap_or(*condition);
            }
            ProblemSpec::SpiralMlp { layers, samples } => {
                if let Some(l) = &self.layers {
                    *layers = l.clone();
                }
                *samples = self.samples.unwrap_or(*samples);
            }
            ProblemSpec::Rosenbrock | ProblemSpec::Multimodal => {}
        }
        let flags = [
            ("coeffs", self.coeffs.is_some(), matches!(spec, ProblemSpec::Quadratic { .. })),
            ("dim", self.dim.is_some(), matches!(spec, ProblemSpec::IllConditioned { .. })),
            ("condition", self.condition.is_some(), matches!(spec, ProblemSpec::IllConditioned { .. })),
            ("layers", self.layers.is_some(), spec.is_classification()),
            ("samples", self.samples.is_some(), spec.is_classification()),
        ];
        if let Some((flag, ..)) = flags.iter().find(|(_, given, applies)| *given && !applies) {
            return Err(misplaced(flag));
        }
        Ok(spec)
    }
}

impl ExpArgs {
    fn config(&self, optimizer: &str) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::new(self.problem.spec()?, optimizer.parse::<OptimizerKind>()?, self.seed);
        cfg.point = self.problem.point.clone();
        cfg.steps = self.steps.unwrap_or(cfg.steps);
        cfg.epochs = self.epochs.unwrap_or(cfg.epochs);
        cfg.batch = self.batch.unwrap_or(cfg.batch);
        cfg.threshold = self.threshold.unwrap_or(cfg.threshold);
        cfg.settings = OptimizerSettings {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            beta3: self.beta3,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            eps: self.eps,
            hess_floor: self.hess_floor,
            step_cap: self.step_cap,
        };
        cfg.scheduler = match self.scheduler.as_str() {
            "off" => None,
            mode => {
                let mut s = SchedulerSpec::new(mode.parse::<ScheduleMode>()?);
                s.lr_scale = self.lr_scale.unwrap_or(s.lr_scale);
                if let Some(c) = &self.cadence {
                    s.cadence = c.parse::<Cadence>()?;
                }
                if let Some(d) = &self.table_dims {
                    s.table_dims = parse_dims(d)?;
                }
                s.rules = self.rules.clone();
                Some(s)
            }
        };
        if cfg.scheduler.is_none() && (self.lr_scale.is_some() || self.cadence.is_some() || self.rules.is_some()) {
            return Err(usage("scheduler flags need --scheduler direct or table"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

/// Human-readable report goes to stdout when the CSV went to a file,
/// otherwise to stderr so stdout stays machine-readable.
fn report(out: Option<&Path>, text: &str) {
    if out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

enum Outcome {
    Ok,
    Diverged,
}

fn execute(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Run { optimizer, exp } => {
            let cfg = exp.config(&optimizer)?;
            let result = run_experiment(&cfg)?;
            emit(exp.out.as_deref(), &result.to_csv())?;
            report(exp.out.as_deref(), &summary_table([&result.summary]));
            Ok(if result.outcome.diverged() { Outcome::Diverged } else { Outcome::Ok })
        }
        Command::Compare { optimizers, exp } => {
            let cfgs = optimizers.iter().map(|o| exp.config(o)).collect::<Result<Vec<_>, _>>()?;
            let cmp = compare(&cfgs)?;
            emit(exp.out.as_deref(), &cmp.to_csv())?;
            report(exp.out.as_deref(), &cmp.summary_table());
            Ok(if cmp.diverged() { Outcome::Diverged } else { Outcome::Ok })
        }
        Command::CheckHessian { problem, r, out, .. } => {
            let spec = problem.spec()?;
            let r_list = match r.as_deref().map(str::trim) {
                None => DEFAULT_R_SWEEP.to_vec(),
                Some("") => Vec::new(),
                Some(list) => list
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad step size `{t}`"))))
                    .collect::<Result<_, _>>()?,
            };
            let rows = harness::check_hessian(&spec, problem.point.as_deref(), &r_list)?;
            let csv = fd_report_csv(&rows);
            if let Some(path) = &out {
                write_text(path, &csv)?;
            }
            print!("{csv}");
            Ok(Outcome::Ok)
        }
        Command::FuzzyTable { out, dims, rules, steps, check, .. } => {
            let dims = parse_dims(&dims)?;
            let table = fuzzy_table(rules.as_deref(), steps, dims)?;
            table.write_csv(&out)?;
            println!("wrote {}x{} table to {}", dims.0, dims.1, out.display());
            if check {
                check_monotonicity(&LookupTable::read_csv(&out)?)?;
                println!("lr monotonicity: ok");
            }
            Ok(Outcome::Ok)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let argv = match config_file::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Diverged) => {
            eprintln!("run diverged");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
