use std::fmt::Write as _;
use std::path::Path;

use super::config::{ExperimentConfig, Problem};
use super::fmt_real;
use crate::error::{Error, Result};
use crate::optim::{run, RunOutcome, RunStatus};
use crate::scheduler::HyperSchedule;

pub const RUN_CSV_HEADER: &str =
    "kind,step,epoch,loss,lr,beta1,beta3,grad_norm,elapsed_ms,status,train_loss,train_acc,val_loss,val_acc";

/// Full-data loss and accuracy after an epoch (classification only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    /// Last step of the epoch.
    pub step: usize,
    /// Mean of the epoch's mini-batch losses.
    pub mean_loss: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub optimizer: String,
    pub status: RunStatus,
    pub steps_run: usize,
    pub initial_loss: f64,
    /// Objective at the final parameters; for a diverged run, the loss that
    /// triggered the stop.
    pub final_loss: f64,
    /// Lowest of the per-step losses and `final_loss`.
    pub best_loss: f64,
    /// Updates applied before the loss first fell below the threshold.
    pub steps_to_threshold: Option<usize>,
    pub metrics: Option<Metrics>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub outcome: RunOutcome,
    pub epochs: Vec<EpochRow>,
    pub summary: Summary,
}

fn metrics(problem: &Problem, w: &[f64]) -> Option<Metrics> {
    let mlp = problem.mlp()?;
    let (train_loss, train_acc) = mlp.metrics(w, mlp.train_set());
    let val = mlp.validation_set().map(|v| mlp.metrics(w, v));
    Some(Metrics { train_loss, train_acc, val_loss: val.map(|v| v.0), val_acc: val.map(|v| v.1) })
}

/// Runs one seeded experiment. Divergence is reported in the summary, not
/// as an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let problem = cfg.problem.build(cfg.seed, cfg.batch)?;
    let obj = problem.objective();
    let w0 = cfg.initial_point(&problem)?;
    let total = cfg.total_steps(&problem);
    let mut optimizer = cfg.settings.build(cfg.optimizer, obj.dim())?;
    let mut scheduler = cfg.scheduler.as_ref().map(|s| s.build(total)).transpose()?;

    let initial_loss = obj.eval(&w0)?;
    let outcome = run(
        optimizer.as_mut(),
        obj,
        w0,
        total,
        scheduler.as_mut().map(|s| s as &mut dyn HyperSchedule),
    )?;

    let epochs = match obj.steps_per_epoch() {
        Some(per_epoch) => outcome
            .epoch_params
            .iter()
            .enumerate()
            .filter_map(|(e, w)| {
                let batch = &outcome.records[e * per_epoch..(e + 1) * per_epoch];
                let mean_loss = batch.iter().map(|r| r.loss).sum::<f64>() / per_epoch as f64;
                Some(EpochRow { epoch: e, step: (e + 1) * per_epoch - 1, mean_loss, metrics: metrics(&problem, w)? })
            })
            .collect(),
        None => Vec::new(),
    };

    let final_loss = match outcome.status {
        RunStatus::Completed => obj.value(&outcome.params),
        RunStatus::Diverged { .. } => outcome.records.last().map_or(f64::NAN, |r| r.loss),
    };
    let best_loss = outcome.records.iter().map(|r| r.loss).chain([final_loss]).fold(f64::INFINITY, f64::min);
    let steps_to_threshold = outcome
        .records
        .iter()
        .find(|r| r.loss < cfg.threshold)
        .map(|r| r.step)
        .or_else(|| (final_loss < cfg.threshold).then_some(outcome.records.len()));
    let summary = Summary {
        optimizer: cfg.optimizer.to_string(),
        status: outcome.status,
        steps_run: outcome.records.len(),
        initial_loss,
        final_loss,
        best_loss,
        steps_to_threshold,
        metrics: match outcome.status {
            RunStatus::Completed => metrics(&problem, &outcome.params),
            RunStatus::Diverged { .. } => None,
        },
    };
    Ok(ExperimentResult { config: cfg.clone(), outcome, epochs, summary })
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn status_str(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Completed => "completed",
        RunStatus::Diverged { .. } => "diverged",
    }
}

impl ExperimentResult {
    /// Rows without a header, each prefixed by `prefix`.
    fn write_rows(&self, out: &mut String, prefix: &str) {
        for r in &self.outcome.records {
            let _ = writeln!(
                out,
                "{prefix}step,{},{},{},{},{},{},{},{:.3},,,,,",
                r.step,
                r.epoch,
                fmt_real(r.loss),
                fmt_real(r.lr),
                fmt_real(r.beta1),
                fmt_real(r.beta3),
                fmt_real(r.grad_norm),
                r.elapsed_ms
            );
        }
        for e in &self.epochs {
            let m = e.metrics;
            let _ = writeln!(
                out,
                "{prefix}epoch,{},{},{},,,,,,,{},{},{},{}",
                e.step,
                e.epoch,
                fmt_real(e.mean_loss),
                fmt_real(m.train_loss),
                fmt_real(m.train_acc),
                opt(m.val_loss),
                opt(m.val_acc)
            );
        }
        let s = &self.summary;
        let last = self.outcome.records.last();
        let m = s.metrics;
        let _ = writeln!(
            out,
            "{prefix}summary,{},{},{},,,,,,{},{},{},{},{}",
            s.steps_run,
            last.map_or(0, |r| r.epoch),
            fmt_real(s.final_loss),
            status_str(s.status),
            opt(m.map(|m| m.train_loss)),
            opt(m.map(|m| m.train_acc)),
            opt(m.and_then(|m| m.val_loss)),
            opt(m.and_then(|m| m.val_acc))
        );
    }

    /// Per-step rows, per-epoch rows (MLP only), then one summary row whose
    /// `step` is the number of steps run.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{RUN_CSV_HEADER}\n");
        self.write_rows(&mut out, "");
        out
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub runs: Vec<ExperimentResult>,
}

/// Runs every config concurrently. All configs must share one problem and
/// step budget; results keep the input order.
pub fn compare(cfgs: &[ExperimentConfig]) -> Result<Comparison> {
    if cfgs.len() < 2 {
        return Err(Error::invalid("compare needs at least two configs"));
    }
    let first = &cfgs[0];
    for c in &cfgs[1..] {
        if c.problem != first.problem || c.point != first.point {
            return Err(Error::invalid(format!("compare needs one problem, got `{}` and `{}`", first.problem, c.problem)));
        }
        if (c.steps, c.epochs, c.batch, c.seed) != (first.steps, first.epochs, first.batch, first.seed) {
            return Err(Error::invalid("compare needs one step budget and seed across configs"));
        }
    }
    let results: Vec<Result<ExperimentResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfgs.iter().map(|c| scope.spawn(move || run_experiment(c))).collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    });
    Ok(Comparison { runs: results.into_iter().collect::<Result<_>>()? })
}

impl Comparison {
    /// Long format: each run's rows prefixed with its optimizer id.
    pub fn to_csv(&self) -> String {
        let mut out = format!("optimizer,{RUN_CSV_HEADER}\n");
        for r in &self.runs {
            r.write_rows(&mut out, &format!("{},", r.config.optimizer));
        }
        out
    }

    pub fn diverged(&self) -> bool {
        self.runs.iter().any(|r| r.outcome.diverged())
    }

    pub fn summary_table(&self) -> String {
        summary_table(self.runs.iter().map(|r| &r.summary))
    }
}

/// Fixed-width text table of run summaries.
pub fn summary_table<'a>(summaries: impl IntoIterator<Item = &'a Summary>) -> String {
    let mut out = format!(
        "{:<10} {:<10} {:>7} {:>12} {:>12} {:>12} {:>10} {:>10} {:>10}\n",
        "optimizer", "status", "steps", "final_loss", "best_loss", "to_thresh", "train_acc", "val_loss", "val_acc"
    );
    for s in summaries {
        let m = s.metrics;
        let num = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |v| format!("{v:.p$}"));
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:>7} {:>12.4e} {:>12.4e} {:>12} {:>10} {:>10} {:>10}",
            s.optimizer,
            status_str(s.status),
            s.steps_run,
            s.final_loss,
            s.best_loss,
            s.steps_to_threshold.map_or("-".to_string(), |n| n.to_string()),
            num(m.map(|m| m.train_acc), 4),
            num(m.and_then(|m| m.val_loss), 4),
            num(m.and_then(|m| m.val_acc), 4),
        );
    }
    out
}

/// Summary figures recomputed from a single-run CSV: `(final_loss,
/// best_loss, steps_to_threshold)`.
pub fn summary_from_csv(csv: &str, threshold: f64) -> Result<(f64, f64, Option<usize>)> {
    let perr = |line: usize, msg: &str| Error::Parse { path: "<run csv>".into(), line, msg: msg.to_string() };
    let mut lines = csv.lines();
    if lines.next() != Some(RUN_CSV_HEADER) {
        return Err(perr(1, "unexpected header"));
    }
    let mut best = f64::INFINITY;
    let mut hit = None;
    let mut summary = None;
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(perr(k + 2, "expected 14 fields"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| perr(k + 2, "bad number"));
        match f[0] {
            "step" => {
                let loss = num(3)?;
                best = best.min(loss);
                if hit.is_none() && loss < threshold {
                    hit = Some(f[1].parse().map_err(|_| perr(k + 2, "bad step"))?);
                }
            }
            "summary" => {
                let steps: usize = f[1].parse().map_err(|_| perr(k + 2, "bad step"))?;
                summary = Some((num(3)?, steps));
            }
            "epoch" => {}
            _ => return Err(perr(k + 2, "unknown row kind")),
        }
    }
    let (final_loss, steps) = summary.ok_or_else(|| perr(0, "missing summary row"))?;
    let hit = hit.or_else(|| (final_loss < threshold).then_some(steps));
    Ok((final_loss, best.min(final_loss), hit))
}
