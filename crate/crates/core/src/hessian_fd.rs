//! Finite-difference estimation of the Hessian diagonal from gradients.
//!
//! Each coordinate is perturbed on its own, so an estimate costs `n + 1`
//! (forward) or `2n` (central) gradient evaluations. This is the
//! high-fidelity estimator that gets checked against analytic oracles; the
//! optimizer in [`crate::salo`] uses a much cheaper online estimate.
//!
//! Divisions use the step actually realized in floating point
//! (`(wᵢ + r) − wᵢ`) rather than the nominal `r`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::param::{check_finite, ParamVector};

/// Default perturbation: the most adequate step reported for deep models.
pub const DEFAULT_PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FdMode {
    Forward,
    Central,
}

impl fmt::Display for FdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FdMode::Forward => "forward",
            FdMode::Central => "central",
        })
    }
}

impl FromStr for FdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(FdMode::Forward),
            "central" => Ok(FdMode::Central),
            other => Err(Error::UnknownId { kind: "finite-difference mode", id: other.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub r: f64,
    pub mode: FdMode,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { r: DEFAULT_PERTURBATION, mode: FdMode::Forward }
    }
}

impl FdConfig {
    pub fn estimate(&self, obj: &dyn Objective, w: &ParamVector) -> Result<ParamVector> {
        match self.mode {
            FdMode::Forward => fd_diag_forward(obj, w, self.r),
            FdMode::Central => fd_diag_central(obj, w, self.r),
        }
    }
}

fn check_step(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("perturbation must be positive and finite, got {r}")))
    }
}

/// `i`-th gradient component at `w` with coordinate `i` replaced by `x`.
fn partial_at(obj: &dyn Objective, w: &[f64], i: usize, x: f64, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(w);
    scratch[i] = x;
    obj.gradient(scratch)[i]
}

/// Forward differences of the gradient: `(∂ᵢL(w + r·eᵢ) − ∂ᵢL(w)) / r`.
pub fn fd_diag_forward(obj: &dyn Objective, w: &ParamVector, r: f64) -> Result<ParamVector> {
    check_step(r)?;
    w.ensure_dim(obj.dim())?;
    let base = obj.gradient(w);
    check_finite("gradient", &base)?;
    let mut scratch = Vec::with_capacity(w.dim());
    let diag: Vec<f64> = (0..w.dim())
        .map(|i| {
            let shifted = w[i] + r;
            let h = shifted - w[i];
            (partial_at(obj, w, i, shifted, &mut scratch) - base[i]) / h
        })
        .collect();
    check_finite("finite-difference Hessian diagonal", &diag)?;
    Ok(ParamVector::from_vec_unchecked(diag))
}

/// Central differences of the gradient with half-steps `±r/2`.
pub fn fd_diag_central(obj: &dyn Objective, w: &ParamVector, r: f64) -> Result<ParamVector> {
    check_step(r)?;
    w.ensure_dim(obj.dim())?;
    let mut scratch = Vec::with_capacity(w.dim());
    let diag: Vec<f64> = (0..w.dim())
        .map(|i| {
            let (hi, lo) = (w[i] + 0.5 * r, w[i] - 0.5 * r);
            let upper = partial_at(obj, w, i, hi, &mut scratch);
            let lower = partial_at(obj, w, i, lo, &mut scratch);
            (upper - lower) / (hi - lo)
        })
        .collect();
    check_finite("finite-difference Hessian diagonal", &diag)?;
    Ok(ParamVector::from_vec_unchecked(diag))
}

/// One row of an error sweep: the worst coordinate error of `mode` at step `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdErrorRow {
    pub r: f64,
    pub mode: FdMode,
    pub max_abs_error: f64,
}

/// Sweeps both modes over `r_list` and measures each against the analytic
/// diagonal. Rows come sorted by `r` descending, forward before central.
pub fn fd_error_report(obj: &dyn Objective, w: &ParamVector, r_list: &[f64]) -> Result<Vec<FdErrorRow>> {
    let oracle = obj.analytic_hess_diag(w)?;
    let mut steps = r_list.to_vec();
    for &r in &steps {
        check_step(r)?;
    }
    steps.sort_by(|a, b| b.total_cmp(a));

    let mut rows = Vec::with_capacity(2 * steps.len());
    for r in steps {
        for mode in [FdMode::Forward, FdMode::Central] {
            let estimate = FdConfig { r, mode }.estimate(obj, w)?;
            let max_abs_error = estimate
                .iter()
                .zip(oracle.iter())
                .fold(0.0_f64, |acc, (e, o)| acc.max((e - o).abs()));
            rows.push(FdErrorRow { r, mode, max_abs_error });
        }
    }
    Ok(rows)
}
