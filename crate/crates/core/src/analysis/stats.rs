//! Sample correlation coefficients.

use crate::error::{Error, Result};

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "correlation over sequences of length {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Argument("correlation needs at least 2 points".into()));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation inputs".into()));
    }
    Ok(())
}

/// Sample Pearson correlation; errors when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_inputs(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::DegenerateCorrelation("zero variance input".into()));
    }
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks, ties sharing the mean of their rank positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied entries share the average rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_inputs(xs, ys)?;
    pearson(&ranks(xs), &ranks(ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_perfect_lines() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_partial_correlation_sign() {
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 10.0]).unwrap();
        assert!(r > 0.0 && r < 1.0, "{r}");
    }

    #[test]
    fn pearson_zero_variance_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateCorrelation(_))
        ));
    }

    #[test]
    fn spearman_monotone_is_one() {
        assert!((spearman(&[1.0, 5.0, 20.0], &[0.1, 0.7, 0.8]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_hand_ranked_case() {
        // ranks x = (1,2,3), ranks y = (3,1,2) -> -0.5
        let r = spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
        assert!((r + 0.5).abs() < 1e-12, "{r}");
    }

    #[test]
    fn spearman_invariant_under_monotone_transform() {
        let xs = [0.2, 1.5, 0.9, 3.0, 2.2];
        let ys = [5.0, 1.0, 4.0, 0.5, 2.0];
        let base = spearman(&xs, &ys).unwrap();
        let warped: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        assert!((spearman(&warped, &ys).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn symmetry_in_arguments() {
        let xs = [0.3, -1.0, 2.5, 0.0];
        let ys = [1.0, 0.2, -0.7, 3.3];
        assert_eq!(pearson(&xs, &ys).unwrap(), pearson(&ys, &xs).unwrap());
        assert_eq!(spearman(&xs, &ys).unwrap(), spearman(&ys, &xs).unwrap());
    }

    #[test]
    fn tied_ranks_average() {
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }
}
