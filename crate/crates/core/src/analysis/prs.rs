//! Privacy risk score (PRS).
//!
//! A shadow model is trained on half the training split; the modified
//! entropy of its predictions on seen (member) and unseen (non-member)
//! points is histogrammed per label. The PRS of a point is then the
//! posterior probability of membership given its entropy bin and label,
//! with a configurable membership prior (0.5 by default).

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{forward, softmax, Batch, Model, ModelSpec};
use crate::rng;
use crate::unlearn::{train, TrainConfig};

const SHADOW_SALT: u64 = 0x7368_6164_6f77_7e7e; // "shadow~~"

/// Probability clamp for the logarithms.
const P_CLAMP: f64 = 1e-12;

/// Modified prediction entropy
/// `−(1−p_y)·log(p_y) − Σ_{i≠y} p_i·log(1−p_i)`.
///
/// Zero for a confidently correct prediction, large for a confidently wrong
/// one; probabilities are clamped to `[1e-12, 1−1e-12]` before the logs.
pub fn modified_entropy(probabilities: &[f64], label: usize) -> Result<f64> {
    if probabilities.len() < 2 {
        return Err(Error::Argument("need at least two class probabilities".into()));
    }
    if label >= probabilities.len() {
        return Err(Error::Label { label, classes: probabilities.len() });
    }
    let sum: f64 = probabilities.iter().sum();
    if probabilities.iter().any(|p| !p.is_finite() || *p < -1e-9 || *p > 1.0 + 1e-9)
        || (sum - 1.0).abs() > 1e-9
    {
        return Err(Error::Argument("probabilities must form a simplex".into()));
    }
    let clamp = |p: f64| p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    let mut score = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        let p = clamp(p);
        if i == label {
            score -= (1.0 - p) * p.ln();
        } else {
            score -= p * (1.0 - p).ln();
        }
    }
    Ok(score.max(0.0))
}

#[derive(Debug, Clone)]
struct LabelBins {
    lo: f64,
    width: f64,
    member_freq: Vec<f64>,
    nonmember_freq: Vec<f64>,
}

/// Per-label histogram attack model.
#[derive(Debug, Clone)]
pub struct PrsModel {
    bins_per_label: usize,
    smoothing: f64,
    prior_member: f64,
    per_label: Vec<LabelBins>,
}

impl PrsModel {
    pub fn bins_per_label(&self) -> usize {
        self.bins_per_label
    }

    pub fn labels(&self) -> usize {
        self.per_label.len()
    }

    pub fn prior_member(&self) -> f64 {
        self.prior_member
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }
}

/// Fits per-label histograms over the pooled score range with additive
/// smoothing and a 0.5 membership prior.
///
/// `member_scores[label]` / `nonmember_scores[label]` hold the shadow-model
/// entropy scores; every label needs at least one score on each side.
pub fn prs_fit(
    member_scores: &[Vec<f64>],
    nonmember_scores: &[Vec<f64>],
    bins_per_label: usize,
    smoothing: f64,
) -> Result<PrsModel> {
    if bins_per_label == 0 {
        return Err(Error::Argument("bins_per_label must be positive".into()));
    }
    if smoothing.is_nan() || smoothing < 0.0 {
        return Err(Error::Argument(format!("smoothing must be >= 0, got {smoothing}")));
    }
    if member_scores.len() != nonmember_scores.len() || member_scores.is_empty() {
        return Err(Error::Shape("member/nonmember label buckets differ".into()));
    }
    let mut per_label = Vec::with_capacity(member_scores.len());
    for (label, (members, nonmembers)) in
        member_scores.iter().zip(nonmember_scores).enumerate()
    {
        if members.is_empty() {
            return Err(Error::PrsFit { label, reason: "no member scores".into() });
        }
        if nonmembers.is_empty() {
            return Err(Error::PrsFit { label, reason: "no non-member scores".into() });
        }
        let pooled = members.iter().chain(nonmembers.iter());
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &s in pooled {
            if !s.is_finite() {
                return Err(Error::PrsFit { label, reason: "non-finite score".into() });
            }
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if hi <= lo {
            hi = lo + 1e-9;
        }
        let width = (hi - lo) / bins_per_label as f64;
        let histogram = |scores: &[f64]| -> Vec<f64> {
            let mut counts = vec![smoothing; bins_per_label];
            for &s in scores {
                let idx = (((s - lo) / width).floor() as isize)
                    .clamp(0, bins_per_label as isize - 1) as usize;
                counts[idx] += 1.0;
            }
            let total: f64 = counts.iter().sum();
            counts.into_iter().map(|c| c / total).collect()
        };
        per_label.push(LabelBins {
            lo,
            width,
            member_freq: histogram(members),
            nonmember_freq: histogram(nonmembers),
        });
    }
    Ok(PrsModel { bins_per_label, smoothing, prior_member: 0.5, per_label })
}

/// Posterior membership probability of a score under the fitted model.
///
/// Scores outside the fitted range clamp to the edge bin. A bin with zero
/// frequency on both sides (possible only with zero smoothing) falls back to
/// the prior.
pub fn prs_score(model: &PrsModel, score: f64, label: usize) -> Result<f64> {
    let bins = model
        .per_label
        .get(label)
        .ok_or(Error::Label { label, classes: model.per_label.len() })?;
    if !score.is_finite() {
        return Err(Error::Argument("score must be finite".into()));
    }
    let idx = (((score - bins.lo) / bins.width).floor() as isize)
        .clamp(0, model.bins_per_label as isize - 1) as usize;
    let pi = model.prior_member;
    let member = bins.member_freq[idx] * pi;
    let nonmember = bins.nonmember_freq[idx] * (1.0 - pi);
    if member + nonmember == 0.0 {
        return Ok(pi);
    }
    Ok(member / (member + nonmember))
}

/// Modified-entropy scores of a model's predictions, one per batch row.
pub fn entropy_scores(model: &Model, batch: &Batch) -> Result<Vec<f64>> {
    let logits = forward(model, batch)?;
    (0..batch.rows())
        .map(|i| modified_entropy(&softmax(logits.row(i)), batch.labels()[i]))
        .collect()
}

/// PRS of every batch row under a target model.
pub fn prs_for_model(prs: &PrsModel, model: &Model, batch: &Batch) -> Result<Vec<f64>> {
    let scores = entropy_scores(model, batch)?;
    scores
        .iter()
        .zip(batch.labels())
        .map(|(&s, &label)| prs_score(prs, s, label))
        .collect()
}

/// Shadow-model PRS fit over a dataset.
///
/// The shadow trains on a seeded half of the training split; its member
/// scores come from that half and its non-member scores from a seeded half
/// of the held-out split.
pub fn fit_shadow_prs(
    data: &Dataset,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    bins_per_label: usize,
    smoothing: f64,
    shadow_seed: u64,
) -> Result<PrsModel> {
    let mut stream = rng::seeded(shadow_seed ^ SHADOW_SALT);

    let mut train_pool = data.train_idx.clone();
    rng::shuffle(&mut stream, &mut train_pool);
    let half = train_pool.len() / 2;
    if half == 0 {
        return Err(Error::Argument("training split too small for a shadow model".into()));
    }
    let shadow_members: Vec<usize> = train_pool[..half].to_vec();
    let shadow_holdout: Vec<usize> = train_pool[half..].to_vec();

    let mut test_pool = data.test_idx.clone();
    rng::shuffle(&mut stream, &mut test_pool);
    let test_half = (test_pool.len() / 2).max(1).min(test_pool.len());
    let nonmembers: Vec<usize> = test_pool[..test_half].to_vec();

    // Everything the shadow does not train on lands in its held-out split,
    // keeping the row partition intact.
    let shadow_test: Vec<usize> =
        shadow_holdout.iter().chain(test_pool.iter()).copied().collect();
    let shadow_data = Dataset::new(
        format!("{}-shadow", data.name),
        data.provenance,
        data.inputs.clone(),
        data.n_features,
        data.labels.clone(),
        data.n_classes,
        shadow_members.clone(),
        shadow_test,
    )?;

    let shadow0 = Model::init(spec.clone(), shadow_seed);
    let (shadow, _) = train(&shadow0, &shadow_data, cfg)?;

    let mut member_scores = vec![Vec::new(); data.n_classes];
    let member_batch = data.batch(&shadow_members)?;
    for (s, &label) in entropy_scores(&shadow, &member_batch)?
        .iter()
        .zip(member_batch.labels())
    {
        member_scores[label].push(*s);
    }
    let mut nonmember_scores = vec![Vec::new(); data.n_classes];
    let nonmember_batch = data.batch(&nonmembers)?;
    for (s, &label) in entropy_scores(&shadow, &nonmember_batch)?
        .iter()
        .zip(nonmember_batch.labels())
    {
        nonmember_scores[label].push(*s);
    }

    prs_fit(&member_scores, &nonmember_scores, bins_per_label, smoothing)
}
