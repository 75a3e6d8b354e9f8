//! Shared fixtures for the benchmarks.

use salo_core::objective::Quadratic;
use salo_core::ParamVector;

/// Ill-conditioned quadratic and a non-stationary point on it.
pub fn quadratic_fixture(dim: usize) -> (Quadratic, ParamVector) {
    let q = Quadratic::ill_conditioned(dim, 1e4).expect("valid quadratic");
    let w = ParamVector::new((0..dim).map(|i| 1.0 + 0.01 * i as f64).collect()).expect("finite point");
    (q, w)
}
