//! Hessian-vector products and spectral-norm estimation.
//!
//! The Hessian of the loss is never materialized for real models. `H·v` is
//! approximated by a central difference of the gradient along `v`, and the
//! top singular value σ₁ = ‖H‖₂ comes from power iteration on H² (two HVPs
//! per iteration), which is insensitive to the sign of extreme eigenvalues.
//!
//! For tiny models (≤ 400 parameters) [`dense_hessian`] builds the full
//! matrix coordinate by coordinate and serves as the independent oracle; its
//! eigenvalues come from a cyclic Jacobi sweep.

use crate::error::{Error, Result};
use crate::nn::{Batch, LossSpec, Model};
use crate::objective::{BatchObjective, Objective};
use crate::rng;
use crate::vector::ParamVector;

/// Guard on the dense-oracle size.
pub const DENSE_MAX_PARAMS: usize = 400;

/// How the reported σ relates to the Hessian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// `max |λ(H)|`, the spectral norm. Default.
    SpectralNorm,
    /// `sqrt(max |λ(H)|)`, kept selectable for sensitivity studies.
    SqrtSpectralNorm,
}

/// Settings for finite-difference HVPs and the power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvpConfig {
    /// Scale of the finite-difference step: `ε = epsilon_scale · (1 + ‖w‖∞)`.
    pub epsilon_scale: f64,
    pub power_iters_max: usize,
    pub power_tol: f64,
    pub probe_seed: u64,
    pub sigma_mode: SigmaMode,
}

impl Default for HvpConfig {
    fn default() -> Self {
        Self {
            epsilon_scale: 1e-5,
            power_iters_max: 100,
            power_tol: 1e-6,
            probe_seed: 0,
            sigma_mode: SigmaMode::SpectralNorm,
        }
    }
}

impl HvpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_scale > 0.0 && self.epsilon_scale <= 1e-2) {
            return Err(Error::Argument(format!(
                "epsilon_scale must be in (0, 1e-2], got {}",
                self.epsilon_scale
            )));
        }
        if self.power_tol.is_nan() || self.power_tol <= 0.0 {
            return Err(Error::Argument("power_tol must be positive".into()));
        }
        if self.power_iters_max == 0 {
            return Err(Error::Argument("power_iters_max must be positive".into()));
        }
        Ok(())
    }
}

/// σ estimate plus whether the power iteration met its tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `H·v` at `w` for an arbitrary gradient source.
///
/// Central difference along the unit direction of `v`, rescaled by `‖v‖`:
/// `(∇L(w+εu) − ∇L(w−εu)) / 2ε · ‖v‖` with `u = v/‖v‖` and
/// `ε = epsilon_scale · (1 + ‖w‖∞)`.
pub fn hvp_of(
    objective: &dyn Objective,
    w: &ParamVector,
    v: &ParamVector,
    cfg: &HvpConfig,
) -> Result<ParamVector> {
    cfg.validate()?;
    if w.len() != objective.dim() || v.len() != objective.dim() {
        return Err(Error::Shape(format!(
            "hvp over {} parameters got w of {} and v of {}",
            objective.dim(),
            w.len(),
            v.len()
        )));
    }
    let norm = v.l2_norm();
    if norm == 0.0 {
        return Err(Error::Argument("hvp direction must be nonzero".into()));
    }
    let eps = cfg.epsilon_scale * (1.0 + w.linf_norm());
    let unit = v.scaled(1.0 / norm)?;
    let plus = objective.grad(&w.add_scaled(eps, &unit)?)?;
    let minus = objective.grad(&w.add_scaled(-eps, &unit)?)?;
    plus.sub(&minus)?.scaled(norm / (2.0 * eps))
}

/// `H·v` of the batch loss at the model's current weights.
pub fn hvp(
    model: &Model,
    batch: &Batch,
    spec: &LossSpec,
    v: &ParamVector,
    cfg: &HvpConfig,
) -> Result<ParamVector> {
    let objective = BatchObjective::from_model(model, batch, spec);
    hvp_of(&objective, model.params(), v, cfg)
}

/// Symmetric matrix in packed row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// All eigenvalues via cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.data.clone();
        if n == 1 {
            return vec![a[0]];
        }
        let idx = |i: usize, j: usize| i * n + j;
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[idx(i, j)] * a[idx(i, j)];
                }
            }
            let scale: f64 = (0..n).map(|i| a[idx(i, i)].abs()).fold(1e-300, f64::max);
            if off.sqrt() <= 1e-14 * scale * n as f64 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[idx(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[idx(k, p)];
                        let akq = a[idx(k, q)];
                        a[idx(k, p)] = c * akp - s * akq;
                        a[idx(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[idx(p, k)];
                        let aqk = a[idx(q, k)];
                        a[idx(p, k)] = c * apk - s * aqk;
                        a[idx(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[idx(i, i)]).collect()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `A·x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * x[j]).sum())
            .collect()
    }
}

/// Dense Hessian plus the asymmetry observed before symmetrization.
#[derive(Debug, Clone)]
pub struct DenseHessian {
    pub matrix: SymMatrix,
    /// `‖H − Hᵀ‖∞` of the raw finite-difference matrix.
    pub symmetry_residual: f64,
}

/// Full Hessian of an objective at `w` by finite differences, for models of
/// at most [`DENSE_MAX_PARAMS`] parameters.
pub fn dense_hessian_of(objective: &dyn Objective, w: &ParamVector) -> Result<DenseHessian> {
    let n = objective.dim();
    if n > DENSE_MAX_PARAMS {
        return Err(Error::TooManyParams { params: n, max: DENSE_MAX_PARAMS });
    }
    if w.len() != n {
        return Err(Error::Shape(format!("point of length {} for dimension {n}", w.len())));
    }
    let mut raw = vec![0.0; n * n];
    for i in 0..n {
        let h = 1e-5 * (1.0 + w[i].abs());
        let mut wp = w.as_slice().to_vec();
        wp[i] += h;
        let plus = objective.grad(&ParamVector::new(wp.clone())?)?;
        wp[i] = w[i] - h;
        let minus = objective.grad(&ParamVector::new(wp)?)?;
        for j in 0..n {
            raw[i * n + j] = (plus[j] - minus[j]) / (2.0 * h);
        }
    }
    let mut residual = 0.0f64;
    let mut sym = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            residual = residual.max((raw[i * n + j] - raw[j * n + i]).abs());
            sym[i * n + j] = 0.5 * (raw[i * n + j] + raw[j * n + i]);
        }
    }
    Ok(DenseHessian { matrix: SymMatrix { n, data: sym }, symmetry_residual: residual })
}

/// Dense Hessian of the batch loss at the model's weights.
pub fn dense_hessian(model: &Model, batch: &Batch, spec: &LossSpec) -> Result<DenseHessian> {
    let objective = BatchObjective::from_model(model, batch, spec);
    dense_hessian_of(&objective, model.params())
}

/// Top singular value of the Hessian by power iteration on H².
///
/// Starts from a seeded point on the unit sphere and stops when the relative
/// change of the Rayleigh quotient `vᵀH²v` drops below `power_tol`, or after
/// `power_iters_max` iterations (reported via `converged`). The returned σ
/// is always the square root of the final Rayleigh quotient.
pub fn top_singular_value_of(
    objective: &dyn Objective,
    w: &ParamVector,
    cfg: &HvpConfig,
) -> Result<SigmaEstimate> {
    cfg.validate()?;
    let n = objective.dim();
    if n == 0 {
        return Err(Error::Argument("model has no parameters".into()));
    }
    let mut probe_rng = rng::seeded(cfg.probe_seed);
    let mut v = ParamVector::new(rng::unit_sphere(&mut probe_rng, n))?;
    let mut rayleigh = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..cfg.power_iters_max {
        iterations = iter + 1;
        let hv = hvp_of(objective, w, &v, cfg)?;
        let current = hv.dot(&hv)?;
        if current <= 0.0 {
            // Numerically zero curvature along every probed direction.
            return Ok(SigmaEstimate { sigma: 0.0, converged: true, iterations });
        }
        let h2v = hvp_of(objective, w, &hv, cfg)?;
        let next_norm = h2v.l2_norm();
        if next_norm == 0.0 {
            rayleigh = current;
            converged = true;
            break;
        }
        if rayleigh.is_finite() {
            let rel = (current - rayleigh).abs() / current.max(f64::MIN_POSITIVE);
            rayleigh = current;
            if rel < cfg.power_tol {
                converged = true;
                break;
            }
        } else {
            rayleigh = current;
        }
        v = h2v.scaled(1.0 / next_norm)?;
    }
    let sigma_sq = if rayleigh.is_finite() { rayleigh.max(0.0) } else { 0.0 };
    let sigma = match cfg.sigma_mode {
        SigmaMode::SpectralNorm => sigma_sq.sqrt(),
        SigmaMode::SqrtSpectralNorm => sigma_sq.sqrt().sqrt(),
    };
    Ok(SigmaEstimate { sigma, converged, iterations })
}

/// σ₁ of the batch-loss Hessian at the model's weights.
pub fn top_singular_value(
    model: &Model,
    batch: &Batch,
    spec: &LossSpec,
    cfg: &HvpConfig,
) -> Result<SigmaEstimate> {
    let objective = BatchObjective::from_model(model, batch, spec);
    top_singular_value_of(&objective, model.params(), cfg)
}

/// Rayleigh quotient `dᵀHd / ‖d‖²` along a fixed direction — the curvature
/// actually felt along `d`, kept as a diagnostic companion to σ₁.
pub fn directional_curvature(
    model: &Model,
    batch: &Batch,
    spec: &LossSpec,
    direction: &ParamVector,
    cfg: &HvpConfig,
) -> Result<f64> {
    let norm_sq = direction.dot(direction)?;
    if norm_sq == 0.0 {
        return Err(Error::Argument("direction must be nonzero".into()));
    }
    let hv = hvp(model, batch, spec, direction, cfg)?;
    Ok(direction.dot(&hv)? / norm_sq)
}
