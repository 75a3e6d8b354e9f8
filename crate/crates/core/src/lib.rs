//! Second-order adaptive optimization with a fuzzy hyperparameter
//! scheduler, plus the problems and experiment runner used to exercise it.
//!
//! - [`salo`]: the optimizer, which tracks an online estimate of the
//!   Hessian diagonal from successive gradients.
//! - [`optim`]: SGD, Adam and AdamW baselines and the shared training loop.
//! - [`hessian_fd`]: finite-difference Hessian diagonals checked against
//!   analytic oracles.
//! - [`fuzzy`], [`scheduler`]: Mamdani inference and the glue that feeds
//!   its outputs into the optimizer each step.
//! - [`harness`]: seeded experiments, comparisons and CSV output.

pub mod error;
pub mod harness;
pub mod fuzzy;
pub mod hessian_fd;
pub mod objective;
pub mod optim;
mod param;
pub mod salo;
pub mod scheduler;

pub use error::{Error, Result};
pub use fuzzy::{FuzzyHyper, FuzzySystem, LookupTable};
pub use hessian_fd::{FdConfig, FdErrorRow, FdMode};
pub use objective::Objective;
pub use optim::{HyperParams, Optimizer, OptimizerKind, RunOutcome, RunStatus, StepHyper, TrainRecord};
pub use param::ParamVector;
pub use salo::{Salo, SaloHyper, SaloState};
pub use scheduler::{FuzzyScheduler, HyperSchedule, SchedulerConfig};
