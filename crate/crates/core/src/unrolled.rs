//! Unrolled SGD.
//!
//! A run of `t` constant-rate SGD steps from `w₀` expands into a first-order
//! sum of gradients all taken at `w₀` plus a recursive curvature correction:
//!
//! ```text
//! w_t ≈ w₀ − η Σᵢ ∇L(w₀, x̂ᵢ) + Σᵢ f(i)
//! f(i) = −η H(w₀, x̂ᵢ) · ( −η Σ_{j<i} ∇L(w₀, x̂ⱼ) + Σ_{j<i} f(j) ),   f(0) = 0
//! ```
//!
//! For quadratic objectives the expansion is exact; for general smooth losses
//! the residual against an SGD replay shrinks like η². The first sum is
//! order-independent and cheap to reverse (that is single-gradient
//! unlearning); the second sum is what the unlearning-error metric bounds.

use crate::error::{Error, Result};
use crate::hessian::{hvp_of, HvpConfig};
use crate::nn::{Batch, LossSpec, Model};
use crate::objective::{BatchObjective, Objective};
use crate::vector::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnrollOrder {
    /// `w₀ − η Σ ∇L(w₀, x̂ᵢ)` only.
    FirstOnly,
    /// First sum plus every recursive `f(i)` term.
    FullRecursive,
}

/// Outcome of an unrolled prediction.
///
/// `predicted_final = w0 + first_sum + second_sum` holds by construction;
/// `residual_vs_sgd` is the distance to an actual SGD replay over the same
/// batch sequence.
#[derive(Debug, Clone)]
pub struct UnrollResult {
    pub predicted_final: ParamVector,
    pub first_sum: ParamVector,
    pub second_sum: ParamVector,
    pub residual_vs_sgd: f64,
}

/// Inputs of the unlearning-error formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorInputs {
    pub eta: f64,
    /// Fine-tune step count.
    pub t: usize,
    /// `‖w_t − w₀‖₂` over the fine-tune window.
    pub delta_w_norm: f64,
    /// Mean of the sampled top singular values.
    pub sigma_avg: f64,
}

impl ErrorInputs {
    pub fn validate(&self) -> Result<()> {
        if self.eta <= 0.0 || !self.eta.is_finite() {
            return Err(Error::Argument(format!("eta must be positive, got {}", self.eta)));
        }
        if self.t == 0 {
            return Err(Error::Argument("t must be at least 1".into()));
        }
        for (name, v) in [("delta_w_norm", self.delta_w_norm), ("sigma_avg", self.sigma_avg)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Argument(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Unrolled prediction over per-step objectives (one objective per batch).
///
/// The replay for the residual runs plain SGD through the same objectives.
/// Each `f(i)` costs one HVP because the Hessian application distributes
/// over the accumulated sum.
pub fn unroll_predict_objectives(
    objectives: &[&dyn Objective],
    w0: &ParamVector,
    eta: f64,
    cfg: &HvpConfig,
    order: UnrollOrder,
) -> Result<UnrollResult> {
    if objectives.is_empty() {
        return Err(Error::Argument("unroll needs at least one batch".into()));
    }
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::Argument(format!("eta must be positive, got {eta}")));
    }
    let dim = w0.len();
    for obj in objectives {
        if obj.dim() != dim {
            return Err(Error::Shape("objective dimension mismatch".into()));
        }
    }

    let grads: Vec<ParamVector> =
        objectives.iter().map(|o| o.grad(w0)).collect::<Result<_>>()?;

    let mut first_sum = ParamVector::zeros(dim);
    for g in &grads {
        first_sum = first_sum.add_scaled(-eta, g)?;
    }

    let mut second_sum = ParamVector::zeros(dim);
    if matches!(order, UnrollOrder::FullRecursive) {
        // accumulated = −η Σ_{j<i} g_j + Σ_{j<i} f(j), built incrementally.
        let mut accumulated = ParamVector::zeros(dim);
        for (i, obj) in objectives.iter().enumerate() {
            if i > 0 {
                let f_i = if accumulated.l2_norm() == 0.0 {
                    ParamVector::zeros(dim)
                } else {
                    hvp_of(*obj, w0, &accumulated, cfg)?.scaled(-eta)?
                };
                second_sum = second_sum.add_scaled(1.0, &f_i)?;
                accumulated = accumulated.add_scaled(1.0, &f_i)?;
            }
            accumulated = accumulated.add_scaled(-eta, &grads[i])?;
        }
    }

    let predicted_final = w0.add_scaled(1.0, &first_sum)?.add_scaled(1.0, &second_sum)?;

    let mut replay = w0.clone();
    for obj in objectives {
        let g = obj.grad(&replay)?;
        replay = replay.add_scaled(-eta, &g)?;
    }
    let residual_vs_sgd = predicted_final.distance(&replay)?;

    Ok(UnrollResult { predicted_final, first_sum, second_sum, residual_vs_sgd })
}

/// Unrolled prediction for a network loss over a batch sequence, starting
/// from the weights of `model0`.
pub fn unroll_predict(
    model0: &Model,
    batches: &[Batch],
    spec: &LossSpec,
    eta: f64,
    cfg: &HvpConfig,
    order: UnrollOrder,
) -> Result<UnrollResult> {
    let objectives: Vec<BatchObjective> = batches
        .iter()
        .map(|b| BatchObjective::from_model(model0, b, spec))
        .collect();
    let refs: Vec<&dyn Objective> = objectives.iter().map(|o| o as &dyn Objective).collect();
    unroll_predict_objectives(&refs, model0.params(), eta, cfg, order)
}

/// The η²-dominant slice of the second sum,
/// `Σ_{i≥1} η² H(w₀,x̂ᵢ) Σ_{j<i} ∇L(w₀,x̂ⱼ)`, kept as a diagnostic for how
/// much of the full recursion the leading order captures.
pub fn eta2_slice_objectives(
    objectives: &[&dyn Objective],
    w0: &ParamVector,
    eta: f64,
    cfg: &HvpConfig,
) -> Result<ParamVector> {
    if objectives.is_empty() {
        return Err(Error::Argument("unroll needs at least one batch".into()));
    }
    let dim = w0.len();
    let mut grad_prefix = ParamVector::zeros(dim);
    let mut slice = ParamVector::zeros(dim);
    for (i, obj) in objectives.iter().enumerate() {
        if i > 0 && grad_prefix.l2_norm() > 0.0 {
            let hv = hvp_of(*obj, w0, &grad_prefix, cfg)?;
            slice = slice.add_scaled(eta * eta, &hv)?;
        }
        let g = obj.grad(w0)?;
        grad_prefix = grad_prefix.add_scaled(1.0, &g)?;
    }
    Ok(slice)
}

/// Number of Hessian-vector-product terms of the η² expansion that contain
/// the batch first used at step `i_star`; always `t − 1`.
pub fn count_terms_with_target(t: usize, i_star: usize) -> Result<usize> {
    if t == 0 {
        return Err(Error::Argument("t must be at least 1".into()));
    }
    if i_star >= t {
        return Err(Error::Argument(format!("i_star {i_star} out of range for t {t}")));
    }
    // i_star terms where the target supplies the Hessian, plus one gradient
    // occurrence under each of the t−1−i_star later Hessians.
    Ok((t - 1 - i_star) + i_star)
}

/// The unlearning error
/// `e = η² · (‖w_t − w₀‖₂ / t) · σ_avg · (t² − t) / 2`.
pub fn unlearning_error(inp: &ErrorInputs) -> Result<f64> {
    inp.validate()?;
    let t = inp.t as f64;
    Ok(inp.eta * inp.eta * (inp.delta_w_norm / t) * inp.sigma_avg * (t * t - t) / 2.0)
}

/// Arithmetic mean of sampled σ₁ values.
pub fn sigma_average(samples: &[(usize, f64)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("sigma_average needs at least one sample".into()));
    }
    Ok(samples.iter().map(|(_, s)| s).sum::<f64>() / samples.len() as f64)
}
