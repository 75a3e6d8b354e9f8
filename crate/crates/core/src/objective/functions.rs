use super::Objective;
use crate::error::{Error, Result};

/// Axis-aligned quadratic `f(w) = Σ cᵢ wᵢ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    coeffs: Vec<f64>,
}

impl Quadratic {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("quadratic needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("quadratic coefficients must be finite"));
        }
        Ok(Self { coeffs })
    }

    /// `dim`-dimensional quadratic whose Hessian diagonal runs geometrically
    /// from 1 to `condition`.
    pub fn ill_conditioned(dim: usize, condition: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("ill-conditioned quadratic needs dim >= 2"));
        }
        if !(condition >= 1.0 && condition.is_finite()) {
            return Err(Error::invalid("condition number must be finite and >= 1"));
        }
        let last = (dim - 1) as f64;
        let coeffs = (0..dim)
            .map(|i| 0.5 * condition.powf(i as f64 / last))
            .collect();
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.coeffs.iter().zip(w).map(|(c, x)| c * x * x).sum()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.coeffs.iter().zip(w).map(|(c, x)| 2.0 * c * x).collect()
    }

    fn hessian_diagonal(&self, _w: &[f64]) -> Option<Vec<f64>> {
        Some(self.coeffs.iter().map(|c| 2.0 * c).collect())
    }
}

/// Two-dimensional Rosenbrock `(1 − x)² + 100 (y − x²)²`, minimum at (1, 1).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Rosenbrock;

impl Objective for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, w: &[f64]) -> f64 {
        let (x, y) = (w[0], w[1]);
        (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (x, y) = (w[0], w[1]);
        let r = y - x * x;
        vec![-2.0 * (1.0 - x) - 400.0 * x * r, 200.0 * r]
    }

    fn hessian_diagonal(&self, w: &[f64]) -> Option<Vec<f64>> {
        let (x, y) = (w[0], w[1]);
        Some(vec![2.0 - 400.0 * y + 1200.0 * x * x, 200.0])
    }
}

/// One-dimensional `x² + 2 sin(5x)`: a parabola with several local minima.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Multimodal;

impl Objective for Multimodal {
    fn name(&self) -> &str {
        "multimodal"
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, w: &[f64]) -> f64 {
        let x = w[0];
        x * x + 2.0 * (5.0 * x).sin()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let x = w[0];
        vec![2.0 * x + 10.0 * (5.0 * x).cos()]
    }

    fn hessian_diagonal(&self, w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![2.0 - 50.0 * (5.0 * w[0]).sin()])
    }
}
