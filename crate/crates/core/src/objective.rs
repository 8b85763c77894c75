//! Gradient sources.
//!
//! The Hessian and unrolling machinery only needs a differentiable objective
//! `w ↦ L(w)` exposed through its gradient. [`Objective`] abstracts that, so
//! the same power iteration and unrolled expansion run against a network
//! loss on a batch ([`BatchObjective`]) or an analytic quadratic
//! ([`Quadratic`]) used as a test oracle and in the enumerable bound
//! scenarios.

use crate::error::{Error, Result};
use crate::nn::{self, Batch, LossSpec, Model, ModelSpec};
use crate::vector::ParamVector;

pub trait Objective {
    fn dim(&self) -> usize;

    /// Gradient of the objective at `w`.
    fn grad(&self, w: &ParamVector) -> Result<ParamVector>;
}

/// A network loss on one fixed batch, as a function of the weights.
pub struct BatchObjective<'a> {
    spec: &'a ModelSpec,
    batch: &'a Batch,
    loss: &'a LossSpec,
}

impl<'a> BatchObjective<'a> {
    pub fn new(spec: &'a ModelSpec, batch: &'a Batch, loss: &'a LossSpec) -> Self {
        Self { spec, batch, loss }
    }

    pub fn from_model(model: &'a Model, batch: &'a Batch, loss: &'a LossSpec) -> Self {
        Self::new(model.spec(), batch, loss)
    }
}

impl Objective for BatchObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn grad(&self, w: &ParamVector) -> Result<ParamVector> {
        let model = Model::new(self.spec.clone(), w.clone())?;
        nn::grad(&model, self.batch, self.loss)
    }
}

/// Axis-aligned quadratic `L(w) = ½ Σ aᵢ (wᵢ − cᵢ)²`.
///
/// The Hessian is `diag(a)`, constant everywhere, which makes this the exact
/// reference for curvature code: finite differences of its gradient have no
/// truncation error.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    curvature: Vec<f64>,
    center: Vec<f64>,
}

impl Quadratic {
    pub fn new(curvature: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if curvature.is_empty() || curvature.len() != center.len() {
            return Err(Error::Shape(format!(
                "curvature of length {} with center of length {}",
                curvature.len(),
                center.len()
            )));
        }
        if curvature.iter().chain(center.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic coefficients".into()));
        }
        Ok(Self { curvature, center })
    }

    /// Isotropic quadratic centered at the origin: `½ k ‖w‖²` in `dim` dims.
    pub fn isotropic(dim: usize, k: f64) -> Result<Self> {
        Self::new(vec![k; dim], vec![0.0; dim])
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        self.curvature
            .iter()
            .zip(&self.center)
            .zip(w)
            .map(|((a, c), x)| 0.5 * a * (x - c) * (x - c))
            .sum()
    }

    /// Largest absolute curvature, the spectral norm of the Hessian.
    pub fn spectral_norm(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn grad(&self, w: &ParamVector) -> Result<ParamVector> {
        if w.len() != self.dim() {
            return Err(Error::Shape(format!(
                "point of length {} for quadratic of dimension {}",
                w.len(),
                self.dim()
            )));
        }
        ParamVector::new(
            self.curvature
                .iter()
                .zip(&self.center)
                .zip(w.as_slice())
                .map(|((a, c), x)| a * (x - c))
                .collect(),
        )
    }
}
