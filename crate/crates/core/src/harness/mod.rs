//! Seeded experiments over the built-in problems, optimizer comparisons,
//! finite-difference checks and lookup-table export. Everything here is
//! deterministic given the config and seed, except `elapsed_ms`.
//!
//! CSV output uses `.` as the decimal separator and 17 significant digits
//! for reals so that regenerated files compare byte for byte.

mod config;
mod experiment;

pub use config::{
    load_system, ExperimentConfig, OptimizerSettings, Problem, ProblemSpec, SchedulerSpec, VALIDATION_FRACTION,
};
pub use experiment::{
    compare, run_experiment, summary_from_csv, summary_table, write_text, Comparison, EpochRow, ExperimentResult,
    Metrics, Summary, RUN_CSV_HEADER,
};

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fuzzy::{build_lookup_table, LookupTable};
use crate::hessian_fd::{fd_error_report, FdErrorRow};
use crate::param::ParamVector;

pub const FD_CSV_HEADER: &str = "r,mode,max_abs_error";

/// Step sizes swept by `check_hessian` when none are given.
pub const DEFAULT_R_SWEEP: [f64; 9] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];

/// Shortest-round-trip-safe formatting: 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Finite-difference error table for `problem` at `point` (or the problem's
/// default starting point).
pub fn check_hessian(problem: &ProblemSpec, point: Option<&[f64]>, r_list: &[f64]) -> Result<Vec<FdErrorRow>> {
    let built = problem.build(0, 1)?;
    let obj = built.objective();
    let w = match point {
        Some(p) => ParamVector::new(p.to_vec())?,
        None => ParamVector::new(problem.default_point().ok_or_else(|| Error::HessianUnavailable(problem.id().into()))?)?,
    };
    w.ensure_dim(obj.dim())?;
    fd_error_report(obj, &w, r_list)
}

pub fn fd_report_csv(rows: &[FdErrorRow]) -> String {
    let mut out = format!("{FD_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", fmt_real(r.r), r.mode, fmt_real(r.max_abs_error));
    }
    out
}

/// Lookup table for a run of `total_steps` steps under `rules` (or the
/// built-in rule base).
pub fn fuzzy_table(rules: Option<&Path>, total_steps: usize, dims: (usize, usize)) -> Result<LookupTable> {
    build_lookup_table(&load_system(rules, total_steps)?, dims.0, dims.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting_has_17_digits() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_real(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn hessian_check_needs_an_oracle() {
        let mlp = ProblemSpec::from_id("spiral-mlp").unwrap();
        assert!(matches!(check_hessian(&mlp, None, &[1e-3]), Err(Error::HessianUnavailable(_))));
        let rows = check_hessian(&ProblemSpec::Rosenbrock, Some(&[1.0, 1.0]), &[1e-5]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(check_hessian(&ProblemSpec::Rosenbrock, None, &[]).unwrap().is_empty());
    }
}
