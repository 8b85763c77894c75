//! The two-output linear classifier under SD loss.
//!
//! With logits `a`, `b` and true label 0, the loss reduces to
//! `−log(eᵃ/(eᵃ+eᵇ)) + γ·sqrt((a² + b² − 0.5(a+b)²)/2)`. The gradient grids
//! emitted here show where the descent direction flips, and the constrained
//! minimum-weight-change problem below it has the closed-form Lagrangian
//! solution `u₁ = ε/(2‖x‖²)·x`, `u₂ = −u₁`.

use crate::error::{Error, Result};

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// Binary SD loss for label 0 at logits `(a, b)`.
pub fn sd_loss_binary(a: f64, b: f64, gamma: f64) -> f64 {
    let sd_sq = ((a * a + b * b - 0.5 * (a + b) * (a + b)) / 2.0).max(0.0);
    softplus(b - a) + gamma * sd_sq.sqrt()
}

/// Analytic gradient `(∂L/∂a, ∂L/∂b)` of [`sd_loss_binary`].
///
/// The SD term has gradient `±γ/2 · sign(a−b)`, taken as zero on the ridge
/// `a = b`.
pub fn sd_loss_binary_grad(a: f64, b: f64, gamma: f64) -> (f64, f64) {
    let s = 1.0 / (1.0 + (a - b).exp()); // sigmoid(b - a)
    let (mut da, mut db) = (-s, s);
    if a != b {
        let sign = if a > b { 1.0 } else { -1.0 };
        da += gamma * sign / 2.0;
        db -= gamma * sign / 2.0;
    }
    (da, db)
}

/// One evaluated grid point of the loss landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeCell {
    pub a: f64,
    pub b: f64,
    pub loss: f64,
    pub neg_grad_a: f64,
    pub neg_grad_b: f64,
}

/// Evaluates the binary SD loss and its negative gradient on a rectangular
/// grid, row-major over `a` then `b`.
pub fn landscape_grid(
    gamma: f64,
    a_range: (f64, f64),
    b_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<LandscapeCell>> {
    if resolution < 2 {
        return Err(Error::Argument("resolution must be at least 2".into()));
    }
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Argument(format!("gamma must be >= 0, got {gamma}")));
    }
    let lerp = |range: (f64, f64), i: usize| {
        range.0 + (range.1 - range.0) * i as f64 / (resolution - 1) as f64
    };
    let mut cells = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let a = lerp(a_range, i);
        for j in 0..resolution {
            let b = lerp(b_range, j);
            let (ga, gb) = sd_loss_binary_grad(a, b, gamma);
            cells.push(LandscapeCell { a, b, loss: sd_loss_binary(a, b, gamma), neg_grad_a: -ga, neg_grad_b: -gb });
        }
    }
    Ok(cells)
}

/// Solution of the minimum-weight-change problem for a binary linear
/// classifier: smallest `‖u₁‖² + ‖u₂‖²` subject to `(u₁ − u₂)·x = ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSolution {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub epsilon: f64,
    /// `‖u₁‖² + ‖u₂‖² = ε² / (2‖x‖²)`.
    pub squared_norm: f64,
}

impl LagrangianSolution {
    /// `|(u₁ − u₂)·x − ε|`, zero up to rounding by construction.
    pub fn constraint_residual(&self, x: &[f64]) -> f64 {
        let dot: f64 = self
            .u1
            .iter()
            .zip(&self.u2)
            .zip(x)
            .map(|((a, b), xi)| (a - b) * xi)
            .sum();
        (dot - self.epsilon).abs()
    }
}

/// Closed-form minimum weight change to move the two outputs `ε` apart.
pub fn min_weight_change(x: &[f64], epsilon: f64) -> Result<LagrangianSolution> {
    if !epsilon.is_finite() {
        return Err(Error::Argument("epsilon must be finite".into()));
    }
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(Error::Argument("x must be nonzero".into()));
    }
    let scale = epsilon / (2.0 * norm_sq);
    let u1: Vec<f64> = x.iter().map(|v| scale * v).collect();
    let u2: Vec<f64> = u1.iter().map(|v| -v).collect();
    let squared_norm = epsilon * epsilon / (2.0 * norm_sq);
    Ok(LagrangianSolution { u1, u2, epsilon, squared_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_2: f64 = std::f64::consts::LN_2;

    #[test]
    fn symmetric_logits_reduce_to_ln2() {
        for gamma in [0.0, 0.5, 7.0] {
            assert!((sd_loss_binary(1.3, 1.3, gamma) - LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_evaluations() {
        let base = sd_loss_binary(1.0, 0.0, 0.0);
        assert!((base - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-12);
        assert!((base - 0.31326168751822286).abs() < 1e-10);
        let reg = sd_loss_binary(1.0, 0.0, 2.0);
        assert!((reg - (base + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn label_swap_symmetry() {
        // The label-1 loss at (a, b) is the label-0 loss at (b, a): the CE
        // term mirrors and the SD term is symmetric in its arguments.
        let direct = sd_loss_binary(0.7, -0.2, 1.5);
        let swapped = sd_loss_binary(-0.2, 0.7, 1.5);
        let sd_term = 1.5 * (0.7f64 + 0.2) / 2.0;
        assert!((direct - sd_term - softplus(-0.9)).abs() < 1e-12);
        assert!((swapped - sd_term - softplus(0.9)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-7;
        for &(a, b, g) in &[(0.4, -1.0, 0.0), (1.5, 0.2, 0.7), (-2.0, 0.5, 3.0)] {
            let (da, db) = sd_loss_binary_grad(a, b, g);
            let fda = (sd_loss_binary(a + h, b, g) - sd_loss_binary(a - h, b, g)) / (2.0 * h);
            let fdb = (sd_loss_binary(a, b + h, g) - sd_loss_binary(a, b - h, g)) / (2.0 * h);
            assert!((da - fda).abs() < 1e-6, "da {da} vs {fda}");
            assert!((db - fdb).abs() < 1e-6, "db {db} vs {fdb}");
        }
    }

    #[test]
    fn pure_ce_gradient_never_flips() {
        // gamma = 0: dL/da = -sigmoid(b-a) < 0 everywhere, so descent always
        // pushes a-b up and there is no finite minimum.
        let cells = landscape_grid(0.0, (-3.0, 3.0), (-3.0, 3.0), 13).unwrap();
        assert!(cells.iter().all(|c| c.neg_grad_a > 0.0 && c.neg_grad_b < 0.0));
    }

    #[test]
    fn strong_gamma_flips_gradient_off_diagonal() {
        // With gamma > 1 the SD term dominates away from a=b, so descent on
        // `a` points back toward the diagonal where a > b.
        let cells = landscape_grid(4.0, (1.0, 2.0), (-2.0, -1.0), 5).unwrap();
        assert!(cells.iter().all(|c| c.neg_grad_a < 0.0));
    }

    #[test]
    fn lagrangian_solution_hand_cases() {
        let sol = min_weight_change(&[1.0, 0.0], 0.2).unwrap();
        assert!((sol.u1[0] - 0.1).abs() < 1e-15 && sol.u1[1] == 0.0);
        assert!((sol.u2[0] + 0.1).abs() < 1e-15);
        assert!((sol.squared_norm - 0.02).abs() < 1e-15);
        assert!(sol.constraint_residual(&[1.0, 0.0]) < 1e-12);

        let sol = min_weight_change(&[2.0, 0.0], 0.2).unwrap();
        assert!((sol.squared_norm - 0.005).abs() < 1e-15);

        let zero = min_weight_change(&[3.0, -1.0], 0.0).unwrap();
        assert!(zero.u1.iter().chain(zero.u2.iter()).all(|&v| v == 0.0));

        assert!(min_weight_change(&[0.0, 0.0], 0.1).is_err());
    }
}
