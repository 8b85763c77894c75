//! Cost arithmetic comparing single-gradient unlearning against SISA.

use crate::error::{Error, Result};

/// Best-case SISA unlearning cost as a fraction of full retraining:
/// `2S / (R + 1)` for `S` shards and `R` slices.
pub fn sisa_cost_ratio(shards: usize, slices: usize) -> Result<f64> {
    if shards == 0 || slices == 0 {
        return Err(Error::Argument("shards and slices must be positive".into()));
    }
    Ok(2.0 * shards as f64 / (slices as f64 + 1.0))
}

/// Single-gradient unlearning cost as a fraction of retraining over `n`
/// training steps: one gradient out of `n`.
pub fn single_gradient_cost_ratio(steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Argument("steps must be positive".into()));
    }
    Ok(1.0 / steps as f64)
}

/// Shard/slice count at which SISA could match the single-gradient cost:
/// `sqrt(n)/2 − 1`.
pub fn sisa_breakeven(steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Argument("steps must be positive".into()));
    }
    Ok((steps as f64).sqrt() / 2.0 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_ratio_arithmetic() {
        let r = sisa_cost_ratio(20, 10).unwrap();
        assert!((r - 40.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn breakeven_at_typical_scale() {
        let b = sisa_breakeven(100_000).unwrap();
        assert!((b - 157.11).abs() < 0.01, "{b}");
    }

    #[test]
    fn single_gradient_ratio() {
        assert_eq!(single_gradient_cost_ratio(100_000).unwrap(), 1e-5);
        assert!(single_gradient_cost_ratio(0).is_err());
    }
}
