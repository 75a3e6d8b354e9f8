use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fuzzy::{default_system, load_definition, FuzzySystem};
use crate::objective::{make_dataset, make_mlp, Mlp, Multimodal, Objective, Quadratic, Rosenbrock};
use crate::optim::{Adam, HyperParams, Optimizer, OptimizerKind, Sgd};
use crate::param::ParamVector;
use crate::salo::{Salo, SaloHyper};
use crate::scheduler::{Cadence, FuzzyScheduler, ScheduleMode, SchedulerConfig};

/// Share of the spiral dataset held out for validation (its last rows).
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// `Σ cᵢ wᵢ²`.
    Quadratic { coeffs: Vec<f64> },
    IllConditioned { dim: usize, condition: f64 },
    Rosenbrock,
    Multimodal,
    SpiralMlp { layers: Vec<usize>, samples: usize },
}

impl ProblemSpec {
    pub const IDS: [&'static str; 5] = ["quadratic", "ill-conditioned", "rosenbrock", "multimodal", "spiral-mlp"];

    /// Problem `id` with its default parameters.
    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "quadratic" => ProblemSpec::Quadratic { coeffs: vec![1.0, 3.0] },
            "ill-conditioned" => ProblemSpec::IllConditioned { dim: 10, condition: 1e4 },
            "rosenbrock" => ProblemSpec::Rosenbrock,
            "multimodal" => ProblemSpec::Multimodal,
            "spiral-mlp" => ProblemSpec::SpiralMlp { layers: vec![2, 16, 2], samples: 512 },
            _ => return Err(Error::UnknownId { kind: "problem", id: id.to_string() }),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::IllConditioned { .. } => "ill-conditioned",
            ProblemSpec::Rosenbrock => "rosenbrock",
            ProblemSpec::Multimodal => "multimodal",
            ProblemSpec::SpiralMlp { .. } => "spiral-mlp",
        }
    }

    pub fn is_classification(&self) -> bool {
        matches!(self, ProblemSpec::SpiralMlp { .. })
    }

    /// Starting point used when none is given. `None` for the MLP, whose
    /// start comes from its seeded initializer.
    pub fn default_point(&self) -> Option<Vec<f64>> {
        match self {
            ProblemSpec::Quadratic { coeffs } => Some(vec![1.0; coeffs.len()]),
            ProblemSpec::IllConditioned { dim, .. } => Some(vec![1.0; *dim]),
            ProblemSpec::Rosenbrock => Some(vec![-1.2, 1.0]),
            ProblemSpec::Multimodal => Some(vec![2.0]),
            ProblemSpec::SpiralMlp { .. } => None,
        }
    }

    /// Instantiates the objective. `seed` and `batch` only matter for the MLP.
    pub fn build(&self, seed: u64, batch: usize) -> Result<Problem> {
        Ok(match self {
            ProblemSpec::Quadratic { coeffs } => Problem::Function(Box::new(Quadratic::new(coeffs.clone())?)),
            ProblemSpec::IllConditioned { dim, condition } => {
                Problem::Function(Box::new(Quadratic::ill_conditioned(*dim, *condition)?))
            }
            ProblemSpec::Rosenbrock => Problem::Function(Box::new(Rosenbrock)),
            ProblemSpec::Multimodal => Problem::Function(Box::new(Multimodal)),
            ProblemSpec::SpiralMlp { layers, samples } => {
                let (train, validation) = make_dataset(seed, *samples)?.split_tail(VALIDATION_FRACTION)?;
                let mlp = make_mlp(layers, seed, train)?.with_batch_size(batch)?;
                Problem::Mlp(if validation.rows() > 0 { mlp.with_validation(validation)? } else { mlp })
            }
        })
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A built problem. The MLP is kept concrete for its accuracy metrics.
pub enum Problem {
    Function(Box<dyn Objective>),
    Mlp(Mlp),
}

impl Problem {
    pub fn objective(&self) -> &dyn Objective {
        match self {
            Problem::Function(f) => f.as_ref(),
            Problem::Mlp(m) => m,
        }
    }

    pub fn mlp(&self) -> Option<&Mlp> {
        match self {
            Problem::Mlp(m) => Some(m),
            Problem::Function(_) => None,
        }
    }
}

/// Optimizer overrides; unset fields take the optimizer's defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OptimizerSettings {
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub beta3: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub eps: Option<f64>,
    pub hess_floor: Option<f64>,
    pub step_cap: Option<f64>,
}

impl OptimizerSettings {
    pub fn build(&self, kind: OptimizerKind, dim: usize) -> Result<Box<dyn Optimizer>> {
        let baseline = |mut h: HyperParams| {
            h.alpha = self.lr.unwrap_or(h.alpha);
            h.beta1 = self.beta1.unwrap_or(h.beta1);
            h.beta2 = self.beta2.unwrap_or(h.beta2);
            h.momentum = self.momentum.unwrap_or(h.momentum);
            h.weight_decay = self.weight_decay.unwrap_or(h.weight_decay);
            h.eps = self.eps.unwrap_or(h.eps);
            h
        };
        Ok(match kind {
            OptimizerKind::Sgd => Box::new(Sgd::new(dim, baseline(HyperParams::sgd()))?),
            OptimizerKind::Adam => Box::new(Adam::new(dim, baseline(HyperParams::adam()))?),
            OptimizerKind::AdamW => Box::new(Adam::adamw(dim, baseline(HyperParams::adamw()))?),
            OptimizerKind::Salo => {
                let d = SaloHyper::default();
                let h = SaloHyper {
                    alpha: self.lr.unwrap_or(d.alpha),
                    beta1: self.beta1.unwrap_or(d.beta1),
                    beta2: self.beta2.unwrap_or(d.beta2),
                    beta3: self.beta3.unwrap_or(d.beta3),
                    eps: self.eps.unwrap_or(d.eps),
                    hess_floor: self.hess_floor.unwrap_or(d.hess_floor),
                    step_cap: self.step_cap.unwrap_or(d.step_cap),
                };
                Box::new(Salo::new(dim, h)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerSpec {
    pub mode: ScheduleMode,
    pub lr_scale: f64,
    pub cadence: Cadence,
    pub table_dims: (usize, usize),
    /// Definition file replacing the built-in rule base.
    pub rules: Option<PathBuf>,
}

impl SchedulerSpec {
    pub fn new(mode: ScheduleMode) -> Self {
        let d = SchedulerConfig::new(mode, 1);
        Self { mode, lr_scale: d.lr_scale, cadence: d.cadence, table_dims: d.table_dims, rules: None }
    }

    pub fn build(&self, total_steps: usize) -> Result<FuzzyScheduler> {
        let cfg = SchedulerConfig {
            lr_scale: self.lr_scale,
            cadence: self.cadence,
            table_dims: self.table_dims,
            ..SchedulerConfig::new(self.mode, total_steps)
        };
        FuzzyScheduler::new(cfg, load_system(self.rules.as_deref(), total_steps)?)
    }
}

/// The rule base in `rules`, or the built-in one.
pub fn load_system(rules: Option<&std::path::Path>, total_steps: usize) -> Result<FuzzySystem> {
    match rules {
        Some(path) => load_definition(path, total_steps),
        None => default_system(total_steps),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerKind,
    pub settings: OptimizerSettings,
    /// `None` runs with fixed hyperparameters.
    pub scheduler: Option<SchedulerSpec>,
    /// Step budget for closed-form problems.
    pub steps: usize,
    /// Epoch budget for the MLP, whose step count is `epochs × batches`.
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub point: Option<Vec<f64>>,
    /// Loss level used for the steps-to-threshold summary.
    pub threshold: f64,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, optimizer: OptimizerKind, seed: u64) -> Self {
        Self {
            problem,
            optimizer,
            settings: OptimizerSettings::default(),
            scheduler: None,
            steps: 1000,
            epochs: 5,
            batch: 32,
            seed,
            point: None,
            threshold: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.epochs == 0 || self.batch == 0 {
            return Err(Error::invalid("steps, epochs and batch must be positive"));
        }
        if !self.threshold.is_finite() {
            return Err(Error::invalid("threshold must be finite"));
        }
        if self.point.is_some() && self.problem.is_classification() {
            return Err(Error::invalid("the MLP starts from its seeded initializer; --point does not apply"));
        }
        Ok(())
    }

    /// Starting parameters for `problem`.
    pub fn initial_point(&self, problem: &Problem) -> Result<ParamVector> {
        let w = match (problem, &self.point) {
            (Problem::Mlp(m), _) => m.initial_params(),
            (Problem::Function(_), Some(p)) => ParamVector::new(p.clone())?,
            (Problem::Function(_), None) => ParamVector::new(self.problem.default_point().unwrap_or_default())?,
        };
        w.ensure_dim(problem.objective().dim())?;
        Ok(w)
    }

    /// Steps the run will take on `problem`.
    pub fn total_steps(&self, problem: &Problem) -> usize {
        match problem.objective().steps_per_epoch() {
            Some(per_epoch) => self.epochs * per_epoch,
            None => self.steps,
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_id(s)
    }
}
