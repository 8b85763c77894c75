//! Flat parameter vectors.
//!
//! [`ParamVector`] is the weight-space representation used everywhere: a flat
//! ordered sequence of `f64` values. Constructors reject non-finite entries
//! so that every vector observable through the public API is finite.

use std::ops::Deref;

use crate::error::{Error, Result};

/// A flat, fixed-length vector of model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    /// Wraps a raw vector, rejecting NaN/Inf entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_len(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    /// `self + scale * other`, checked for matching lengths and finiteness.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Self::new(values)
    }

    pub fn scaled(&self, scale: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * scale).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    /// Euclidean distance `‖self − other‖₂`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_len(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "parameter vectors of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}
