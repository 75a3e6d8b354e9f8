//! Loss- and progress-driven hyperparameter scheduling.
//!
//! Before every step the training loop hands the scheduler the current loss
//! and step; the scheduler answers with the `(lr, beta1, beta3)` to use.
//! [`FuzzyScheduler`] queries a [`FuzzySystem`] directly or through its
//! precomputed [`LookupTable`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fuzzy::{build_lookup_table, FuzzySystem, LookupTable};
use crate::optim::StepHyper;

/// Upper clamp applied to scheduled decay rates.
pub const BETA_MAX: f64 = 0.995;

/// Supplies the hyperparameters for each training step.
pub trait HyperSchedule: Send {
    /// `step` is 1-based; `epoch` is 0-based.
    fn next(&mut self, loss: f64, step: usize, epoch: usize) -> StepHyper;
}

/// Always returns the same values. Useful as a baseline and for checking
/// that scheduling itself does not perturb a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSchedule(pub StepHyper);

impl HyperSchedule for ConstantSchedule {
    fn next(&mut self, _loss: f64, _step: usize, _epoch: usize) -> StepHyper {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Direct,
    Table,
}

impl FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(ScheduleMode::Direct),
            "table" => Ok(ScheduleMode::Table),
            _ => Err(Error::UnknownId { kind: "scheduler mode", id: s.to_string() }),
        }
    }
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleMode::Direct => "direct",
            ScheduleMode::Table => "table",
        })
    }
}

/// How often the scheduled values are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    PerStep,
    /// Refreshed on the first step of each epoch and held until the next.
    PerEpoch,
}

impl FromStr for Cadence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(Cadence::PerStep),
            "epoch" => Ok(Cadence::PerEpoch),
            _ => Err(Error::UnknownId { kind: "scheduler cadence", id: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerConfig {
    pub mode: ScheduleMode,
    pub total_steps: usize,
    /// Multiplies the fuzzy `lr` output, whose universe spans `[0, 1.5e-7]`.
    pub lr_scale: f64,
    pub loss_clamp: f64,
    pub table_dims: (usize, usize),
    /// Decay of the loss EMA fed to the scheduler.
    pub ema_decay: f64,
    pub cadence: Cadence,
}

impl SchedulerConfig {
    pub fn new(mode: ScheduleMode, total_steps: usize) -> Self {
        Self {
            mode,
            total_steps,
            lr_scale: 1e4,
            loss_clamp: 6.0,
            table_dims: (61, 61),
            ema_decay: 0.9,
            cadence: Cadence::PerStep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::invalid("scheduler total_steps must be at least 1"));
        }
        if !(self.lr_scale > 0.0 && self.lr_scale.is_finite()) {
            return Err(Error::invalid(format!("lr_scale must be positive, got {}", self.lr_scale)));
        }
        if !(self.loss_clamp > 0.0 && self.loss_clamp.is_finite()) {
            return Err(Error::invalid(format!("loss_clamp must be positive, got {}", self.loss_clamp)));
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::invalid(format!("ema_decay must lie in [0, 1), got {}", self.ema_decay)));
        }
        if self.table_dims.0 < 2 || self.table_dims.1 < 2 {
            return Err(Error::invalid("table dims must be at least 2x2"));
        }
        Ok(())
    }
}

/// Where scheduled values come from.
#[derive(Debug, Clone)]
pub enum ScheduleSource {
    Direct(FuzzySystem),
    Table(LookupTable),
}

impl ScheduleSource {
    /// Builds the source `cfg.mode` asks for from `system`.
    pub fn from_system(cfg: &SchedulerConfig, system: FuzzySystem) -> Result<Self> {
        Ok(match cfg.mode {
            ScheduleMode::Direct => ScheduleSource::Direct(system),
            ScheduleMode::Table => ScheduleSource::Table(build_lookup_table(&system, cfg.table_dims.0, cfg.table_dims.1)?),
        })
    }
}

/// Hyperparameters for `step` (1-based) at `loss`. Pure: the loss is
/// clamped to `[0, loss_clamp]`, progress to `min(step / T, 1)`.
pub fn schedule(cfg: &SchedulerConfig, source: &ScheduleSource, loss: f64, step: usize) -> Result<StepHyper> {
    let loss = if loss.is_nan() { cfg.loss_clamp } else { loss.clamp(0.0, cfg.loss_clamp) };
    let iter_frac = (step as f64 / cfg.total_steps as f64).min(1.0);
    let h = match source {
        ScheduleSource::Direct(system) => system.infer_hyper(loss, iter_frac)?,
        ScheduleSource::Table(table) => table.lookup(loss, iter_frac),
    };
    Ok(StepHyper {
        lr: h.lr * cfg.lr_scale,
        beta1: h.beta1.clamp(0.0, BETA_MAX),
        beta3: h.beta3.clamp(0.0, BETA_MAX),
    })
}

/// Stateful scheduler for one run: smooths the loss with an EMA (seeded
/// with the first loss seen) and evaluates [`schedule`] on the smoothed
/// value.
#[derive(Debug, Clone)]
pub struct FuzzyScheduler {
    cfg: SchedulerConfig,
    source: ScheduleSource,
    ema: Option<f64>,
    held: Option<(usize, StepHyper)>,
}

impl FuzzyScheduler {
    pub fn new(cfg: SchedulerConfig, system: FuzzySystem) -> Result<Self> {
        cfg.validate()?;
        let source = ScheduleSource::from_system(&cfg, system)?;
        Ok(Self { cfg, source, ema: None, held: None })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn source(&self) -> &ScheduleSource {
        &self.source
    }

    /// Smoothed loss after the most recent call to `next`.
    pub fn smoothed_loss(&self) -> Option<f64> {
        self.ema
    }

    fn smooth(&mut self, loss: f64) -> f64 {
        let d = self.cfg.ema_decay;
        let next = match self.ema {
            Some(prev) => d * prev + (1.0 - d) * loss,
            None => loss,
        };
        self.ema = Some(next);
        next
    }
}

impl HyperSchedule for FuzzyScheduler {
    fn next(&mut self, loss: f64, step: usize, epoch: usize) -> StepHyper {
        let smoothed = self.smooth(loss);
        if self.cfg.cadence == Cadence::PerEpoch {
            if let Some((e, h)) = self.held {
                if e == epoch {
                    return h;
                }
            }
        }
        // Inputs are clamped and the system is validated at construction, so
        // inference cannot fail here.
        let h = schedule(&self.cfg, &self.source, smoothed, step.max(1)).expect("scheduler inference failed");
        self.held = Some((epoch, h));
        h
    }
}
