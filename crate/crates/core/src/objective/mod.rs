//! Objective functions: the loss/gradient abstraction plus the desk-scale
//! problems used throughout the crate.
//!
//! Closed-form test functions expose their analytic Hessian diagonal, which
//! serves as the oracle for the finite-difference estimators. The MLP does
//! not; it exposes mini-batch evaluation instead.

mod dataset;
mod functions;
mod mlp;

pub use dataset::{make_dataset, Dataset};
pub use functions::{Multimodal, Quadratic, Rosenbrock};
pub use mlp::{make_mlp, Mlp};

use crate::error::{Error, Result};
use crate::param::{check_finite, ParamVector};

/// A differentiable loss over a flat parameter vector.
///
/// Implementors provide the raw, unchecked `value`/`gradient` kernels over
/// slices. The checked entry points ([`Objective::eval`], [`Objective::grad`],
/// [`Objective::analytic_hess_diag`]) validate dimensions and finiteness.
/// Objectives are immutable after construction.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Loss at `w`. `w.len()` must equal `self.dim()`.
    fn value(&self, w: &[f64]) -> f64;

    /// Analytic gradient at `w`.
    fn gradient(&self, w: &[f64]) -> Vec<f64>;

    /// Closed-form diagonal of the Hessian, when the objective has one.
    fn hessian_diagonal(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Number of mini-batches making up one epoch; `None` for deterministic
    /// objectives, where every training step sees the full loss.
    fn steps_per_epoch(&self) -> Option<usize> {
        None
    }

    /// Loss and gradient seen by training step `step` (0-based).
    fn step_loss_grad(&self, _step: usize, w: &[f64]) -> (f64, Vec<f64>) {
        (self.value(w), self.gradient(w))
    }

    fn eval(&self, w: &ParamVector) -> Result<f64> {
        w.ensure_dim(self.dim())?;
        Ok(self.value(w))
    }

    fn grad(&self, w: &ParamVector) -> Result<ParamVector> {
        w.ensure_dim(self.dim())?;
        let g = self.gradient(w);
        check_finite("gradient", &g)?;
        Ok(ParamVector::from_vec_unchecked(g))
    }

    fn analytic_hess_diag(&self, w: &ParamVector) -> Result<ParamVector> {
        w.ensure_dim(self.dim())?;
        let h = self
            .hessian_diagonal(w)
            .ok_or_else(|| Error::HessianUnavailable(self.name().to_string()))?;
        check_finite("hessian diagonal", &h)?;
        Ok(ParamVector::from_vec_unchecked(h))
    }
}
