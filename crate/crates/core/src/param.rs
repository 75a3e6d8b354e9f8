use std::ops::Deref;

use crate::error::{Error, Result};

/// Flat vector of all trainable parameters.
///
/// Constructed through [`ParamVector::new`], which rejects empty input and
/// non-finite entries. Read access goes through `Deref<Target = [f64]>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("parameter vector must have at least one entry"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "parameter vector", index });
        }
        Ok(Self(values))
    }

    /// Vector of `dim` copies of `value`.
    ///
    /// # Panics
    /// If `dim == 0` or `value` is not finite.
    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim > 0, "parameter vector must have at least one entry");
        assert!(value.is_finite(), "fill value must be finite");
        Self(vec![value; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::filled(dim, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Wraps values already known to be non-empty and finite.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self(values)
    }

    pub(crate) fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got: self.dim() })
        }
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Rejects the first non-finite entry of `values`, naming its index.
pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(ParamVector::new(vec![]).is_err());
        let err = ParamVector::new(vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn norms() {
        let p = ParamVector::new(vec![3.0, -4.0]).unwrap();
        assert_eq!(p.norm(), 5.0);
        assert_eq!(p.max_abs(), 4.0);
        assert_eq!(p.dim(), 2);
    }
}
