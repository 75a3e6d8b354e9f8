use std::time::Instant;

use super::{Optimizer, StepHyper};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::param::ParamVector;
use crate::scheduler::HyperSchedule;

/// A run is flagged diverged once its loss exceeds this multiple of
/// `max(1, |initial loss|)`, or turns non-finite.
pub const BLOWUP_FACTOR: f64 = 1e10;

/// One training step, logged before the update is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta3: f64,
    pub grad_norm: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// Stopped at `step`, whose record carries the offending loss.
    Diverged { step: usize },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<TrainRecord>,
    /// Parameters after the last successful update.
    pub params: ParamVector,
    /// Parameters at the end of each completed epoch (mini-batch objectives only).
    pub epoch_params: Vec<ParamVector>,
    pub status: RunStatus,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

/// Runs `steps` optimizer updates from `w0`.
///
/// Each step evaluates the loss and gradient the objective schedules for it,
/// lets `schedule` overwrite the hyperparameters, logs a record with the
/// pre-update loss and the values actually used, then applies the update.
/// A non-finite or blown-up loss (see [`BLOWUP_FACTOR`]), a non-finite
/// gradient, or a non-finite update ends the run with
/// [`RunStatus::Diverged`] instead of an error.
pub fn run(
    optimizer: &mut dyn Optimizer,
    obj: &dyn Objective,
    w0: ParamVector,
    steps: usize,
    mut schedule: Option<&mut dyn HyperSchedule>,
) -> Result<RunOutcome> {
    if steps == 0 {
        return Err(Error::invalid("a run needs at least one step"));
    }
    w0.ensure_dim(obj.dim())?;

    let started = Instant::now();
    let per_epoch = obj.steps_per_epoch();
    let mut records = Vec::with_capacity(steps);
    let mut w = w0;
    let mut blowup = f64::INFINITY;
    let mut epoch_params = Vec::new();

    for step in 0..steps {
        let epoch = per_epoch.map_or(0, |n| step / n);
        let (loss, grad) = obj.step_loss_grad(step, &w);
        if step == 0 {
            blowup = BLOWUP_FACTOR * loss.abs().max(1.0);
        }
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let loss_ok = loss.is_finite() && loss <= blowup;

        if loss_ok {
            if let Some(s) = schedule.as_deref_mut() {
                optimizer.set_hyper(s.next(loss, step + 1, epoch));
            }
        }
        let StepHyper { lr, beta1, beta3 } = optimizer.hyper();
        let mut record = TrainRecord { step, epoch, loss, lr, beta1, beta3, grad_norm, elapsed_ms: 0.0 };

        let next = if loss_ok && grad_norm.is_finite() {
            ParamVector::new(grad).and_then(|g| optimizer.step(&w, &g)).ok()
        } else {
            None
        };
        record.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        records.push(record);
        match next {
            Some(next) => w = next,
            None => {
                return Ok(RunOutcome { records, params: w, epoch_params, status: RunStatus::Diverged { step } });
            }
        }
        if per_epoch.is_some_and(|n| (step + 1) % n == 0) {
            epoch_params.push(w.clone());
        }
    }
    Ok(RunOutcome { records, params: w, epoch_params, status: RunStatus::Completed })
}
