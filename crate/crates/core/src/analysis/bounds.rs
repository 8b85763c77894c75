//! Enumerable weight-distribution bound checks.
//!
//! At desk scale the distribution of final weights under SGD with batch
//! size 1 can be written down exactly: enumerate every data ordering `I`,
//! replay SGD deterministically to get the final weights `w_I`, and place an
//! isotropic Gaussian (the terminal noise `g`) on each. Training on the full
//! dataset gives the mixture `P`, dropping the target gives `P′` (the same
//! orderings with the target's steps removed, so `g = g′`), and an
//! unlearning rule `u_I` applied to `w_I` gives `P″`.
//!
//! Three facts are then checked numerically on a grid:
//!
//! * `‖P − P′‖∞  ≤ L · d`  with `d = mean ‖d_I‖`, `d_I = w_I − w_{I′}`,
//! * `‖P″ − P′‖∞ ≤ L · v`  with `v = mean ‖d_I + u_I‖`,
//! * `v ≤ b · a` in reverse, where `b` bounds `‖P″ − P′‖∞` and
//!   `a = ∫‖w‖ dw` over the (truncated) support,
//!
//! with `L` the Lipschitz constant of the Gaussian component — `1/(σ²√(2πe))`
//! in one dimension, `e^{−1/2}/(2πσ³)` for the isotropic two-dimensional
//! case. The grid supremum only underestimates the true one, so a reported
//! `bound_holds` is conservative.

use crate::error::{Error, Result};
use crate::objective::{Objective, Quadratic};
use crate::vector::ParamVector;

/// Cap on the number of enumerated orderings `n!^m`.
const MAX_ORDERINGS: usize = 20_000;

/// Grid placement for density evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum GridSpec {
    /// Component means ± 8σ; 4001 points per axis in 1D, 201 in 2D.
    #[default]
    Auto,
    AutoWithPoints(usize),
    Explicit { lo: Vec<f64>, hi: Vec<f64>, points_per_axis: usize },
}

/// A fully enumerable training scenario in the lemma's scope: batch size 1,
/// per-point quadratic losses, Gaussian noise on the final weights.
#[derive(Debug, Clone)]
pub struct BoundScenario {
    /// Per-datapoint losses; all share one dimension (1 or 2).
    pub points: Vec<Quadratic>,
    /// Index of the datapoint to forget.
    pub target_index: usize,
    pub w0: Vec<f64>,
    pub eta: f64,
    pub m_epochs: usize,
    /// Standard deviation of the terminal noise `g`.
    pub noise_sigma: f64,
    pub grid: GridSpec,
}

impl BoundScenario {
    pub fn dim(&self) -> usize {
        self.points.first().map(|p| p.curvature().len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if n == 0 || n > 5 {
            return Err(Error::Argument(format!("dataset size must be in 1..=5, got {n}")));
        }
        let dim = self.dim();
        if !(1..=2).contains(&dim) {
            return Err(Error::Argument(format!("parameter count must be 1 or 2, got {dim}")));
        }
        if self.points.iter().any(|p| p.curvature().len() != dim) {
            return Err(Error::Shape("all point losses must share one dimension".into()));
        }
        if self.w0.len() != dim {
            return Err(Error::Shape("w0 dimension mismatch".into()));
        }
        if self.target_index >= n {
            return Err(Error::Argument(format!("target index {} out of range", self.target_index)));
        }
        if self.eta <= 0.0 || !self.eta.is_finite() {
            return Err(Error::Argument("eta must be positive".into()));
        }
        if self.m_epochs == 0 {
            return Err(Error::Argument("m_epochs must be at least 1".into()));
        }
        if self.noise_sigma <= 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::Argument("noise_sigma must be positive".into()));
        }
        let total = factorial(n).checked_pow(self.m_epochs as u32);
        match total {
            Some(t) if t <= MAX_ORDERINGS => Ok(()),
            _ => Err(Error::Enumeration(format!(
                "{n}!^{} orderings exceed the cap of {MAX_ORDERINGS}",
                self.m_epochs
            ))),
        }
    }
}

/// Unlearning update `u_I`; every variant is a function of `(w₀, I)` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlearnRule {
    /// `u_I = 0`; the corollary collapses to the lemma.
    Noop,
    /// `u_I = η·m·∇L(w₀, x*)`, single-gradient at the initial weights.
    SingleGradientAtInit,
    /// `u_I = −d_I`, the perfect update (recomputed from `(w₀, I)` by
    /// replaying both trainings).
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub sup_diff: f64,
    pub lipschitz: f64,
    /// `d = mean ‖d_I‖₂`.
    pub mean_shift: f64,
    pub bound_holds: bool,
    /// `L·d − sup_diff`.
    pub slack: f64,
    pub orderings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    pub sup_diff: f64,
    pub lipschitz: f64,
    /// `v = mean ‖d_I + u_I‖₂`.
    pub mean_residual: f64,
    /// `d` from the lemma, for the improvement comparison.
    pub mean_shift: f64,
    pub bound_holds: bool,
    /// Whether `v ≤ d` under the rule (reported, not asserted).
    pub improves: bool,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseReport {
    /// `‖E[P″] − E[P′]‖₂`, computed analytically from the mixture means.
    pub v: f64,
    /// Grid supremum of `|P″ − P′|`.
    pub b_sup: f64,
    /// `∫ ‖w‖₂ dw` over the grid box.
    pub a_mass: f64,
    pub holds: bool,
    /// Certified lower bound on the mixture mass inside the grid.
    pub coverage: f64,
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(factorial(n));
    let mut items: Vec<usize> = (0..n).collect();
    permute(&mut items, 0, &mut out);
    out
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// All orderings over `m` epochs: each epoch is an independent permutation.
fn orderings(n: usize, m: usize) -> Vec<Vec<usize>> {
    let per_epoch = permutations(n);
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::with_capacity(out.len() * per_epoch.len());
        for prefix in &out {
            for perm in &per_epoch {
                let mut order = prefix.clone();
                order.extend_from_slice(perm);
                next.push(order);
            }
        }
        out = next;
    }
    out
}

/// Exact SGD replay over one ordering, optionally skipping the target.
fn replay(scn: &BoundScenario, order: &[usize], skip_target: bool) -> Result<Vec<f64>> {
    let mut w = ParamVector::new(scn.w0.clone())?;
    for &p in order {
        if skip_target && p == scn.target_index {
            continue;
        }
        let g = scn.points[p].grad(&w)?;
        w = w.add_scaled(-scn.eta, &g)?;
    }
    Ok(w.into_vec())
}

fn rule_update(scn: &BoundScenario, rule: UnlearnRule, order: &[usize]) -> Result<Vec<f64>> {
    match rule {
        UnlearnRule::Noop => Ok(vec![0.0; scn.dim()]),
        UnlearnRule::SingleGradientAtInit => {
            let w0 = ParamVector::new(scn.w0.clone())?;
            let g = scn.points[scn.target_index].grad(&w0)?;
            Ok(g.iter().map(|v| v * scn.eta * scn.m_epochs as f64).collect())
        }
        UnlearnRule::Oracle => {
            let kept = replay(scn, order, false)?;
            let dropped = replay(scn, order, true)?;
            Ok(kept.iter().zip(&dropped).map(|(a, b)| b - a).collect())
        }
    }
}

/// Lipschitz constant of the isotropic Gaussian density.
fn gaussian_lipschitz(dim: usize, sigma: f64) -> f64 {
    match dim {
        1 => 1.0 / (sigma * sigma * (std::f64::consts::TAU * std::f64::consts::E).sqrt()),
        2 => (-0.5f64).exp() / (std::f64::consts::TAU * sigma.powi(3)),
        _ => unreachable!("validated dims"),
    }
}

struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    fn cells(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.axes.len());
        for axis in &self.axes {
            out.push(axis[idx % axis.len()]);
            idx /= axis.len();
        }
        out
    }

    /// Trapezoid weight of a flat index (product of per-axis weights).
    fn weight(&self, mut idx: usize) -> f64 {
        let mut w = 1.0;
        for axis in &self.axes {
            let i = idx % axis.len();
            idx /= axis.len();
            let step = axis[1] - axis[0];
            let edge = i == 0 || i == axis.len() - 1;
            w *= if edge { 0.5 * step } else { step };
        }
        w
    }
}

fn build_grid(scn: &BoundScenario, component_means: &[&Vec<f64>]) -> Result<Grid> {
    let dim = scn.dim();
    let (lo, hi, points) = match &scn.grid {
        GridSpec::Explicit { lo, hi, points_per_axis } => {
            if lo.len() != dim || hi.len() != dim {
                return Err(Error::Grid("explicit grid dimension mismatch".into()));
            }
            (lo.clone(), hi.clone(), *points_per_axis)
        }
        auto => {
            let points = match auto {
                GridSpec::AutoWithPoints(p) => *p,
                _ => {
                    if dim == 1 {
                        4001
                    } else {
                        201
                    }
                }
            };
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for mean in component_means {
                for (k, &m) in mean.iter().enumerate() {
                    lo[k] = lo[k].min(m - 8.0 * scn.noise_sigma);
                    hi[k] = hi[k].max(m + 8.0 * scn.noise_sigma);
                }
            }
            (lo, hi, points)
        }
    };
    if points < 2 {
        return Err(Error::Grid("grid needs at least 2 points per axis".into()));
    }
    let axes = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| {
            if h.is_nan() || l.is_nan() || h <= l {
                return Err(Error::Grid(format!("degenerate grid axis [{l}, {h}]")));
            }
            Ok((0..points)
                .map(|i| l + (h - l) * i as f64 / (points - 1) as f64)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(Grid { axes })
}

/// Equal-weight Gaussian mixture density at `x`.
fn mixture_density(means: &[&Vec<f64>], sigma: f64, x: &[f64]) -> f64 {
    let dim = x.len() as i32;
    let norm = (std::f64::consts::TAU * sigma * sigma).powi(dim).sqrt();
    let mut total = 0.0;
    for mean in means {
        let r2: f64 = mean.iter().zip(x).map(|(m, xi)| (xi - m) * (xi - m)).sum();
        total += (-r2 / (2.0 * sigma * sigma)).exp() / norm;
    }
    total / means.len() as f64
}

fn sup_abs_difference(grid: &Grid, a: &[&Vec<f64>], b: &[&Vec<f64>], sigma: f64) -> f64 {
    let mut sup = 0.0f64;
    for idx in 0..grid.cells() {
        let x = grid.point(idx);
        let diff = (mixture_density(a, sigma, &x) - mixture_density(b, sigma, &x)).abs();
        sup = sup.max(diff);
    }
    sup
}

/// Certified lower bound on the mass every component keeps inside the grid
/// box, from the Gaussian tail bound `P(|X| > kσ) ≤ 2e^{−k²/2}` per axis.
fn coverage_bound(grid: &Grid, components: &[&Vec<f64>], sigma: f64) -> f64 {
    let mut k_min = f64::INFINITY;
    for mean in components {
        for (axis, &m) in grid.axes.iter().zip(mean.iter()) {
            let lo = axis[0];
            let hi = *axis.last().expect("nonempty axis");
            let d = (m - lo).min(hi - m);
            if d < 0.0 {
                return 0.0;
            }
            k_min = k_min.min(d / sigma);
        }
    }
    let dim = grid.axes.len() as f64;
    (1.0 - 2.0 * dim * (-k_min * k_min / 2.0).exp()).max(0.0)
}

struct Ensemble {
    kept: Vec<Vec<f64>>,    // w_I
    dropped: Vec<Vec<f64>>, // w_{I'}
}

fn enumerate_finals(scn: &BoundScenario) -> Result<Ensemble> {
    scn.validate()?;
    let orders = orderings(scn.points.len(), scn.m_epochs);
    let mut kept = Vec::with_capacity(orders.len());
    let mut dropped = Vec::with_capacity(orders.len());
    for order in &orders {
        kept.push(replay(scn, order, false)?);
        dropped.push(replay(scn, order, true)?);
    }
    Ok(Ensemble { kept, dropped })
}

fn mean_norm(vectors: &[Vec<f64>]) -> f64 {
    vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .sum::<f64>()
        / vectors.len() as f64
}

fn numeric_slack(bound: f64) -> f64 {
    1e-12 * bound.max(1.0)
}

/// Checks `‖P − P′‖∞ ≤ L·d` by exact mixture evaluation on the grid.
pub fn check_lemma1(scn: &BoundScenario) -> Result<LemmaReport> {
    let ensemble = enumerate_finals(scn)?;
    let shifts: Vec<Vec<f64>> = ensemble
        .kept
        .iter()
        .zip(&ensemble.dropped)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    let d = mean_norm(&shifts);
    let all_means: Vec<&Vec<f64>> = ensemble.kept.iter().chain(ensemble.dropped.iter()).collect();
    let grid = build_grid(scn, &all_means)?;
    let p: Vec<&Vec<f64>> = ensemble.kept.iter().collect();
    let p_prime: Vec<&Vec<f64>> = ensemble.dropped.iter().collect();
    let sup_diff = sup_abs_difference(&grid, &p, &p_prime, scn.noise_sigma);
    let lipschitz = gaussian_lipschitz(scn.dim(), scn.noise_sigma);
    let bound = lipschitz * d;
    Ok(LemmaReport {
        sup_diff,
        lipschitz,
        mean_shift: d,
        bound_holds: sup_diff <= bound + numeric_slack(bound),
        slack: bound - sup_diff,
        orderings: ensemble.kept.len(),
    })
}

/// Checks `‖P″ − P′‖∞ ≤ L·v` for an unlearning rule depending only on
/// `(w₀, I)`.
pub fn check_corollary1(scn: &BoundScenario, rule: UnlearnRule) -> Result<CorollaryReport> {
    let ensemble = enumerate_finals(scn)?;
    let orders = orderings(scn.points.len(), scn.m_epochs);
    let mut unlearned = Vec::with_capacity(ensemble.kept.len());
    let mut residuals = Vec::with_capacity(ensemble.kept.len());
    for (i, order) in orders.iter().enumerate() {
        let u = rule_update(scn, rule, order)?;
        let w2: Vec<f64> = ensemble.kept[i].iter().zip(&u).map(|(w, ui)| w + ui).collect();
        residuals.push(
            w2.iter()
                .zip(&ensemble.dropped[i])
                .map(|(a, b)| a - b)
                .collect::<Vec<f64>>(),
        );
        unlearned.push(w2);
    }
    let shifts: Vec<Vec<f64>> = ensemble
        .kept
        .iter()
        .zip(&ensemble.dropped)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    let d = mean_norm(&shifts);
    let v = mean_norm(&residuals);

    let all_means: Vec<&Vec<f64>> = unlearned.iter().chain(ensemble.dropped.iter()).collect();
    let grid = build_grid(scn, &all_means)?;
    let p2: Vec<&Vec<f64>> = unlearned.iter().collect();
    let p_prime: Vec<&Vec<f64>> = ensemble.dropped.iter().collect();
    let sup_diff = sup_abs_difference(&grid, &p2, &p_prime, scn.noise_sigma);
    let lipschitz = gaussian_lipschitz(scn.dim(), scn.noise_sigma);
    let bound = lipschitz * v;
    Ok(CorollaryReport {
        sup_diff,
        lipschitz,
        mean_residual: v,
        mean_shift: d,
        bound_holds: sup_diff <= bound + numeric_slack(bound),
        improves: v <= d + 1e-12,
        slack: bound - sup_diff,
    })
}

/// Checks the reverse direction `v ≤ b·a` on the truncated support.
pub fn check_reverse_bound(scn: &BoundScenario, rule: UnlearnRule) -> Result<ReverseReport> {
    let ensemble = enumerate_finals(scn)?;
    let orders = orderings(scn.points.len(), scn.m_epochs);
    let unlearned: Vec<Vec<f64>> = orders
        .iter()
        .zip(&ensemble.kept)
        .map(|(order, w)| {
            let u = rule_update(scn, rule, order)?;
            Ok(w.iter().zip(&u).map(|(a, b)| a + b).collect())
        })
        .collect::<Result<_>>()?;

    let dim = scn.dim();
    let mean_of = |set: &Vec<Vec<f64>>| -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        for v in set {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        acc.into_iter().map(|a| a / set.len() as f64).collect()
    };
    let mean_p2 = mean_of(&unlearned);
    let mean_pp = mean_of(&ensemble.dropped);
    let v = mean_p2
        .iter()
        .zip(&mean_pp)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    let all_means: Vec<&Vec<f64>> = unlearned.iter().chain(ensemble.dropped.iter()).collect();
    let grid = build_grid(scn, &all_means)?;
    let coverage = coverage_bound(&grid, &all_means, scn.noise_sigma);
    if coverage < 1.0 - 1e-6 {
        return Err(Error::Grid(format!(
            "grid covers only {coverage:.9} of the mixture mass"
        )));
    }
    let p2: Vec<&Vec<f64>> = unlearned.iter().collect();
    let p_prime: Vec<&Vec<f64>> = ensemble.dropped.iter().collect();
    let b_sup = sup_abs_difference(&grid, &p2, &p_prime, scn.noise_sigma);

    let mut a_mass = 0.0;
    for idx in 0..grid.cells() {
        let x = grid.point(idx);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        a_mass += grid.weight(idx) * norm;
    }

    let bound = b_sup * a_mass;
    Ok(ReverseReport {
        v,
        b_sup,
        a_mass,
        holds: v <= bound + numeric_slack(bound),
        coverage,
    })
}
