//! Instrumented training, unlearning methods, and the paired experiment.
//!
//! A run has two phases: `N` pretrain steps followed by `t` fine-tune steps.
//! The fine-tune window is where unlearning happens — its first weights
//! `w_N` play the role of the expansion point `w₀`, and the instrumentation
//! (per-step loss, accuracy, `‖w_s − w_N‖₂`, sampled σ₁) is exactly what the
//! unlearning-error formula consumes.
//!
//! Two unlearning methods are provided. Single-gradient adds
//! `η·m·∇L(w_eval, x̂*)` back onto the final weights (divided by the batch
//! size when forgetting a single example instead of a whole batch), with the
//! gradient taken either at `w_N` or at `w_{N+t}`. Amnesiac unlearning
//! subtracts the logged updates of every step that trained on the target.
//! Ground truth is the retraining oracle: a deterministic replay of the same
//! schedule with the target's steps removed.

mod schedule;

pub use schedule::{build_schedule, BatchSchedule};

use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hessian::{top_singular_value, HvpConfig};
use crate::nn::{accuracy, grad, loss_and_grad, Batch, LossSpec, Model};
use crate::rng;
use crate::unrolled::{sigma_average, unlearning_error, ErrorInputs};
use crate::vector::ParamVector;

const PROBE_SALT: u64 = 0x7072_6f62_6521_2121; // "probe!!!"

/// Abort training when the loss exceeds this or stops being finite.
pub const DIVERGENCE_CAP: f64 = 1e6;

/// Everything that pins down one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning rate; zero is allowed and leaves the weights untouched.
    pub eta: f64,
    pub batch_size: usize,
    pub pretrain_steps: usize,
    pub finetune_steps: usize,
    /// Number of times the target batch recurs during fine-tune.
    pub epochs_over_target: usize,
    pub loss: LossSpec,
    pub seed: u64,
    /// σ₁ sampling cadence over fine-tune steps.
    pub sigma_every: usize,
    /// Log per-step updates touching the target (enables amnesiac).
    pub log_updates: bool,
    /// Which fine-tune step's batch is the forget target (0 = first).
    pub target_batch_index: usize,
    pub hvp: HvpConfig,
    /// Batch size for the σ₁ probe; `None` uses the current training batch.
    pub hvp_probe_batch: Option<usize>,
}

impl TrainConfig {
    /// Minimal config for tests and small pipelines.
    pub fn quick(loss: LossSpec, eta: f64, seed: u64) -> Self {
        Self {
            eta,
            batch_size: 1,
            pretrain_steps: 0,
            finetune_steps: 1,
            epochs_over_target: 1,
            loss,
            seed,
            sigma_every: 20,
            log_updates: true,
            target_batch_index: 0,
            hvp: HvpConfig::default(),
            hvp_probe_batch: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::Argument(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        if self.finetune_steps == 0 {
            return Err(Error::Argument("finetune_steps must be at least 1".into()));
        }
        if self.epochs_over_target == 0 {
            return Err(Error::Argument("epochs_over_target must be at least 1".into()));
        }
        if self.sigma_every == 0 {
            return Err(Error::Argument("sigma_every must be at least 1".into()));
        }
        self.loss.validate()?;
        self.hvp.validate()
    }
}

/// One instrumentation record; σ₁ is present only at sampled steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub sigma_top: Option<f64>,
    /// `‖w_step − w₀‖₂` during pretrain, `‖w_step − w_N‖₂` from step N on.
    pub delta_w_norm: f64,
}

/// Full instrumentation of a training run.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub cfg: TrainConfig,
    pub records: Vec<StepRecord>,
    /// Checkpoints at steps 0, N, and N+t.
    pub checkpoints: BTreeMap<usize, ParamVector>,
    /// `(global step, applied update)` for fine-tune steps that trained on
    /// the target; populated only when `cfg.log_updates` is set.
    pub target_updates: Vec<(usize, ParamVector)>,
    /// `(global step, σ₁)` samples over the fine-tune window.
    pub sigma_samples: Vec<(usize, f64)>,
    /// Fine-tune step indices that ran the target batch.
    pub target_steps: Vec<usize>,
}

impl RunLog {
    pub fn pretrain_steps(&self) -> usize {
        self.cfg.pretrain_steps
    }

    pub fn finetune_steps(&self) -> usize {
        self.cfg.finetune_steps
    }

    pub fn checkpoint(&self, step: usize) -> Result<&ParamVector> {
        self.checkpoints.get(&step).ok_or(Error::MissingCheckpoint(step))
    }

    /// `‖w_{N+t} − w_N‖₂` from the stored checkpoints.
    pub fn delta_w_final(&self) -> Result<f64> {
        let w_n = self.checkpoint(self.pretrain_steps())?;
        let w_final = self.checkpoint(self.pretrain_steps() + self.finetune_steps())?;
        w_final.distance(w_n)
    }

    pub fn sigma_avg(&self) -> Result<f64> {
        sigma_average(&self.sigma_samples)
    }

    /// Unlearning error of the fine-tune window.
    pub fn unlearning_error(&self) -> Result<f64> {
        if self.cfg.eta == 0.0 {
            return Ok(0.0);
        }
        unlearning_error(&ErrorInputs {
            eta: self.cfg.eta,
            t: self.finetune_steps(),
            delta_w_norm: self.delta_w_final()?,
            sigma_avg: self.sigma_avg()?,
        })
    }
}

fn step_weights(params: &ParamVector, eta: f64, gradient: &ParamVector) -> Result<ParamVector> {
    params.add_scaled(-eta, gradient)
}

/// Runs `N` pretrain plus `t` fine-tune steps with full instrumentation.
///
/// Deterministic: the same `(model0, dataset, cfg)` reproduce a bit-identical
/// `RunLog`. Fails with [`Error::Diverged`] if the loss leaves
/// `[0, DIVERGENCE_CAP]` or turns non-finite.
pub fn train(model0: &Model, data: &Dataset, cfg: &TrainConfig) -> Result<(Model, RunLog)> {
    cfg.validate()?;
    if data.test_idx.is_empty() {
        return Err(Error::Argument("dataset needs a held-out split".into()));
    }
    let schedule = build_schedule(data, cfg)?;
    let test = data.test_batch()?;

    let mut probe_rng = rng::seeded(cfg.seed ^ PROBE_SALT);
    let mut model = model0.clone();
    let mut records = Vec::with_capacity(cfg.pretrain_steps + cfg.finetune_steps + 1);
    let mut checkpoints = BTreeMap::new();
    let mut target_updates = Vec::new();
    let mut sigma_samples = Vec::new();

    checkpoints.insert(0, model.params().clone());
    let w_start = model.params().clone();

    for (s, indices) in schedule.pretrain.iter().enumerate() {
        let batch = data.batch(indices)?;
        let (loss, gradient) = loss_and_grad(&model, &batch, &cfg.loss)?;
        if !loss.is_finite() || loss > DIVERGENCE_CAP {
            return Err(Error::Diverged { step: s, loss });
        }
        records.push(StepRecord {
            step: s,
            loss,
            accuracy: accuracy(&model, &test)?,
            sigma_top: None,
            delta_w_norm: model.params().distance(&w_start)?,
        });
        model = model.with_params(step_weights(model.params(), cfg.eta, &gradient)?)?;
    }

    let w_n = model.params().clone();
    checkpoints.insert(cfg.pretrain_steps, w_n.clone());
    let target_set: std::collections::BTreeSet<usize> =
        schedule.target_steps.iter().copied().collect();

    for (i, indices) in schedule.finetune.iter().enumerate() {
        let step = cfg.pretrain_steps + i;
        let batch = data.batch(indices)?;
        let (loss, gradient) = loss_and_grad(&model, &batch, &cfg.loss)?;
        if !loss.is_finite() || loss > DIVERGENCE_CAP {
            return Err(Error::Diverged { step, loss });
        }

        let sigma_top = if i % cfg.sigma_every == 0 {
            let probe = match cfg.hvp_probe_batch {
                None => batch.clone(),
                Some(k) => {
                    let picks = rng::sample_indices(&mut probe_rng, data.train_idx.len(), k.min(data.train_idx.len()));
                    let rows: Vec<usize> = picks.into_iter().map(|p| data.train_idx[p]).collect();
                    data.batch(&rows)?
                }
            };
            let est = top_singular_value(&model, &probe, &cfg.loss, &cfg.hvp)?;
            sigma_samples.push((step, est.sigma));
            Some(est.sigma)
        } else {
            None
        };

        records.push(StepRecord {
            step,
            loss,
            accuracy: accuracy(&model, &test)?,
            sigma_top,
            delta_w_norm: model.params().distance(&w_n)?,
        });

        let update = gradient.scaled(-cfg.eta)?;
        if cfg.log_updates && target_set.contains(&i) {
            target_updates.push((step, update.clone()));
        }
        model = model.with_params(model.params().add_scaled(1.0, &update)?)?;
    }

    let final_step = cfg.pretrain_steps + cfg.finetune_steps;
    checkpoints.insert(final_step, model.params().clone());
    let last_batch = data.batch(schedule.finetune.last().expect("t >= 1"))?;
    let (final_loss, _) = loss_and_grad(&model, &last_batch, &cfg.loss)?;
    records.push(StepRecord {
        step: final_step,
        loss: final_loss,
        accuracy: accuracy(&model, &test)?,
        sigma_top: None,
        delta_w_norm: model.params().distance(&w_n)?,
    });

    let log = RunLog {
        cfg: cfg.clone(),
        records,
        checkpoints,
        target_updates,
        sigma_samples,
        target_steps: schedule.target_steps,
    };
    Ok((model, log))
}

/// Where the correction gradient is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientPoint {
    /// At `w_N`, as the expansion prescribes.
    AtInitial,
    /// At `w_{N+t}`, the cheaper experimental variant.
    AtFinal,
}

impl GradientPoint {
    pub fn as_str(&self) -> &'static str {
        match self {
            GradientPoint::AtInitial => "at_initial",
            GradientPoint::AtFinal => "at_final",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "at_initial" => Ok(GradientPoint::AtInitial),
            "at_final" => Ok(GradientPoint::AtFinal),
            other => Err(Error::Argument(format!("unknown gradient point '{other}'"))),
        }
    }
}

/// Whether the forget target is the whole batch or one example within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetScope {
    WholeBatch,
    /// Single example; the correction picks up the `1/b` averaging factor.
    SingleExample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlearnMethod {
    SingleGradient,
    Amnesiac,
}

impl UnlearnMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnlearnMethod::SingleGradient => "single_gradient",
            UnlearnMethod::Amnesiac => "amnesiac",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single_gradient" => Ok(UnlearnMethod::SingleGradient),
            "amnesiac" => Ok(UnlearnMethod::Amnesiac),
            other => Err(Error::Argument(format!("unknown unlearn method '{other}'"))),
        }
    }
}

/// What to unlearn and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnlearnRequest {
    pub method: UnlearnMethod,
    /// Only meaningful for [`UnlearnMethod::SingleGradient`].
    pub gradient_point: GradientPoint,
    pub target_batch_index: usize,
}

impl Default for UnlearnRequest {
    fn default() -> Self {
        Self {
            method: UnlearnMethod::SingleGradient,
            gradient_point: GradientPoint::AtInitial,
            target_batch_index: 0,
        }
    }
}

/// Single-gradient unlearning: `w″ = w_{N+t} + (η·m / b?) ∇L(w_eval, x̂*)`.
///
/// The whole-batch form multiplies by `η·m` (the batch gradient is already
/// the mean over its rows); the single-example form divides by `batch_size`.
/// Reads only the `w_N` checkpoint (for [`GradientPoint::AtInitial`]) and
/// the final weights.
#[allow(clippy::too_many_arguments)]
pub fn single_gradient_unlearn(
    run: &RunLog,
    model_final: &Model,
    target: &Batch,
    eta: f64,
    batch_size: usize,
    m: usize,
    point: GradientPoint,
    scope: TargetScope,
) -> Result<Model> {
    if m == 0 {
        return Err(Error::Argument("m must be at least 1".into()));
    }
    if matches!(scope, TargetScope::SingleExample) {
        if batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        if target.rows() != 1 {
            return Err(Error::Argument(
                "single-example unlearning expects a one-row target".into(),
            ));
        }
    }
    let eval_model = match point {
        GradientPoint::AtInitial => {
            let w_n = run.checkpoint(run.pretrain_steps())?;
            model_final.with_params(w_n.clone())?
        }
        GradientPoint::AtFinal => model_final.clone(),
    };
    let g = grad(&eval_model, target, &run.cfg.loss)?;
    let factor = match scope {
        TargetScope::WholeBatch => eta * m as f64,
        TargetScope::SingleExample => eta * m as f64 / batch_size as f64,
    };
    model_final.with_params(model_final.params().add_scaled(factor, &g)?)
}

/// Result of amnesiac unlearning; `updates_removed == 0` flags a no-op.
#[derive(Debug, Clone)]
pub struct AmnesiacOutcome {
    pub model: Model,
    pub updates_removed: usize,
}

/// Amnesiac unlearning: subtract every logged update that trained on the
/// target, i.e. add the gradients back.
pub fn amnesiac_unlearn(run: &RunLog, model_final: &Model) -> Result<AmnesiacOutcome> {
    if !run.cfg.log_updates {
        return Err(Error::UpdateLogDisabled);
    }
    let mut params = model_final.params().clone();
    for (_, update) in &run.target_updates {
        params = params.add_scaled(-1.0, update)?;
    }
    Ok(AmnesiacOutcome {
        model: model_final.with_params(params)?,
        updates_removed: run.target_updates.len(),
    })
}

/// Naive-retraining oracle: replays the fine-tune schedule from `w_N` with
/// every recurrence of the batch at `skip_batch_index` removed.
pub fn retrain_oracle(
    model_n: &Model,
    data: &Dataset,
    cfg: &TrainConfig,
    skip_batch_index: usize,
) -> Result<Model> {
    let effective = TrainConfig { target_batch_index: skip_batch_index, ..cfg.clone() };
    effective.validate()?;
    let schedule = build_schedule(data, &effective)?;
    let skip: std::collections::BTreeSet<usize> = schedule.target_steps.iter().copied().collect();

    let mut model = model_n.clone();
    for (i, indices) in schedule.finetune.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        let batch = data.batch(indices)?;
        let (loss, gradient) = loss_and_grad(&model, &batch, &effective.loss)?;
        if !loss.is_finite() || loss > DIVERGENCE_CAP {
            return Err(Error::Diverged { step: effective.pretrain_steps + i, loss });
        }
        model = model.with_params(step_weights(model.params(), effective.eta, &gradient)?)?;
    }
    Ok(model)
}

/// `v = ‖w″ − w′‖₂`.
pub fn verification_error(w_unlearned: &ParamVector, w_retrained: &ParamVector) -> Result<f64> {
    w_unlearned.distance(w_retrained)
}

/// One `(e, v)` sample along the fine-tune trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    /// Global step (pretrain offset included).
    pub step: usize,
    pub e: f64,
    pub v: f64,
}

/// Everything a paired experiment produces.
#[derive(Debug, Clone)]
pub struct PairedResult {
    pub e: f64,
    pub v: f64,
    /// Held-out accuracy of the original final model.
    pub accuracy: f64,
    pub run: RunLog,
    pub model_final: Model,
    pub model_retrained: Model,
    pub model_unlearned: Model,
    pub target_batch: Batch,
    /// `(e, v)` along the trajectory when a cadence was requested.
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Trains, retrains without the target, unlearns per the request, and
/// reports `(e, v, accuracy)` plus the optional `(e, v)` trajectory sampled
/// every `sample_every` fine-tune steps.
pub fn run_paired_experiment(
    model0: &Model,
    data: &Dataset,
    cfg: &TrainConfig,
    request: &UnlearnRequest,
    sample_every: Option<usize>,
) -> Result<PairedResult> {
    let mut cfg = cfg.clone();
    cfg.target_batch_index = request.target_batch_index;
    if matches!(request.method, UnlearnMethod::Amnesiac) {
        cfg.log_updates = true;
    }
    cfg.validate()?;

    let (model_final, run) = train(model0, data, &cfg)?;
    let schedule = build_schedule(data, &cfg)?;
    let target_batch = data.batch(&schedule.finetune[cfg.target_batch_index])?;
    let model_n = model_final.with_params(run.checkpoint(cfg.pretrain_steps)?.clone())?;

    let model_retrained = retrain_oracle(&model_n, data, &cfg, cfg.target_batch_index)?;
    let model_unlearned = match request.method {
        UnlearnMethod::SingleGradient => single_gradient_unlearn(
            &run,
            &model_final,
            &target_batch,
            cfg.eta,
            cfg.batch_size,
            cfg.epochs_over_target,
            request.gradient_point,
            TargetScope::WholeBatch,
        )?,
        UnlearnMethod::Amnesiac => amnesiac_unlearn(&run, &model_final)?.model,
    };

    let e = run.unlearning_error()?;
    let v = verification_error(model_unlearned.params(), model_retrained.params())?;
    let acc = accuracy(&model_final, &data.test_batch()?)?;

    let trajectory = match sample_every {
        Some(every) if every > 0 => {
            sample_trajectory(&run, &model_n, data, &cfg, request, &schedule, &target_batch, every)?
        }
        _ => Vec::new(),
    };

    Ok(PairedResult {
        e,
        v,
        accuracy: acc,
        run,
        model_final,
        model_retrained,
        model_unlearned,
        target_batch,
        trajectory,
    })
}

/// Replays the fine-tune phase alongside the retrain path, emitting `(e, v)`
/// as if training had stopped at each sampled step.
#[allow(clippy::too_many_arguments)]
fn sample_trajectory(
    run: &RunLog,
    model_n: &Model,
    data: &Dataset,
    cfg: &TrainConfig,
    request: &UnlearnRequest,
    schedule: &BatchSchedule,
    target_batch: &Batch,
    every: usize,
) -> Result<Vec<TrajectoryPoint>> {
    let skip: std::collections::BTreeSet<usize> = schedule.target_steps.iter().copied().collect();
    let grad_at_initial = match request.method {
        UnlearnMethod::SingleGradient if matches!(request.gradient_point, GradientPoint::AtInitial) => {
            Some(grad(model_n, target_batch, &cfg.loss)?)
        }
        _ => None,
    };

    let mut main = model_n.clone();
    let mut retrain = model_n.clone();
    let mut occurrences = 0usize;
    let mut points = Vec::new();

    for (i, indices) in schedule.finetune.iter().enumerate() {
        let batch = data.batch(indices)?;
        let (_, gradient) = loss_and_grad(&main, &batch, &cfg.loss)?;
        main = main.with_params(step_weights(main.params(), cfg.eta, &gradient)?)?;
        if skip.contains(&i) {
            occurrences += 1;
        } else {
            let (_, g_r) = loss_and_grad(&retrain, &batch, &cfg.loss)?;
            retrain = retrain.with_params(step_weights(retrain.params(), cfg.eta, &g_r)?)?;
        }

        let t_eff = i + 1;
        if t_eff % every != 0 && t_eff != cfg.finetune_steps {
            continue;
        }

        let step = cfg.pretrain_steps + t_eff;
        let e = if cfg.eta == 0.0 {
            0.0
        } else {
            let sigmas: Vec<(usize, f64)> = run
                .sigma_samples
                .iter()
                .copied()
                .filter(|(s, _)| *s < step)
                .collect();
            if sigmas.is_empty() {
                0.0
            } else {
                unlearning_error(&ErrorInputs {
                    eta: cfg.eta,
                    t: t_eff,
                    delta_w_norm: main.params().distance(model_n.params())?,
                    sigma_avg: sigma_average(&sigmas)?,
                })?
            }
        };

        let unlearned = match request.method {
            UnlearnMethod::SingleGradient => {
                let factor = cfg.eta * occurrences as f64;
                match &grad_at_initial {
                    Some(g) => main.params().add_scaled(factor, g)?,
                    None => {
                        let g = grad(&main, target_batch, &cfg.loss)?;
                        main.params().add_scaled(factor, &g)?
                    }
                }
            }
            UnlearnMethod::Amnesiac => {
                let mut params = main.params().clone();
                for (s, update) in &run.target_updates {
                    if *s < step {
                        params = params.add_scaled(-1.0, update)?;
                    }
                }
                params
            }
        };
        let v = verification_error(&unlearned, retrain.params())?;
        points.push(TrajectoryPoint { step, e, v });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Provenance};
    use crate::nn::{Activation, ModelSpec};

    fn dataset(seed: u64, n: usize) -> Dataset {
        let mut stream = rng::seeded(seed);
        let mut inputs = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let center = if label == 0 { -1.0 } else { 1.0 };
            inputs.push(center + 0.3 * rng::standard_normal(&mut stream));
            inputs.push(-center + 0.3 * rng::standard_normal(&mut stream));
            labels.push(label);
        }
        let split = n * 4 / 5;
        Dataset::new(
            "unit-blobs",
            Provenance::Blobs,
            inputs,
            2,
            labels,
            2,
            (0..split).collect(),
            (split..n).collect(),
        )
        .unwrap()
    }

    fn small_model(seed: u64) -> Model {
        Model::init(ModelSpec::mlp(&[2, 6, 2], Activation::Tanh).unwrap(), seed)
    }

    fn base_cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 4,
            finetune_steps: 5,
            sigma_every: 2,
            ..TrainConfig::quick(LossSpec::ce(), 0.1, 3)
        }
    }

    #[test]
    fn single_step_is_one_sgd_update() {
        let data = dataset(1, 20);
        let model0 = small_model(5);
        let cfg = TrainConfig { finetune_steps: 1, batch_size: 4, ..TrainConfig::quick(LossSpec::ce(), 0.1, 3) };
        let (model, run) = train(&model0, &data, &cfg).unwrap();
        let schedule = build_schedule(&data, &cfg).unwrap();
        let batch = data.batch(&schedule.finetune[0]).unwrap();
        let g = grad(&model0, &batch, &cfg.loss).unwrap();
        let expected = model0.params().add_scaled(-0.1, &g).unwrap();
        assert_eq!(model.params(), &expected);
        assert_eq!(run.records.len(), 2);
    }

    #[test]
    fn zero_learning_rate_freezes_weights() {
        let data = dataset(2, 20);
        let model0 = small_model(6);
        let cfg = TrainConfig { eta: 0.0, ..base_cfg() };
        let (model, run) = train(&model0, &data, &cfg).unwrap();
        assert_eq!(model.params(), model0.params());
        assert!(run.records.iter().all(|r| r.delta_w_norm == 0.0));
        assert_eq!(run.unlearning_error().unwrap(), 0.0);
    }

    #[test]
    fn replay_is_bit_identical() {
        let data = dataset(3, 24);
        let model0 = small_model(7);
        let cfg = base_cfg();
        let (m1, r1) = train(&model0, &data, &cfg).unwrap();
        let (m2, r2) = train(&model0, &data, &cfg).unwrap();
        assert_eq!(m1.params(), m2.params());
        assert_eq!(r1.records, r2.records);
        assert_eq!(r1.checkpoints, r2.checkpoints);
        assert_eq!(r1.target_updates, r2.target_updates);
    }

    #[test]
    fn delta_norm_matches_checkpoints() {
        let data = dataset(4, 24);
        let model0 = small_model(8);
        let cfg = TrainConfig { pretrain_steps: 3, ..base_cfg() };
        let (_, run) = train(&model0, &data, &cfg).unwrap();
        let last = run.records.last().unwrap();
        assert!((last.delta_w_norm - run.delta_w_final().unwrap()).abs() < 1e-9);
        assert!(run.records.windows(2).all(|w| w[0].step < w[1].step));
    }

    #[test]
    fn single_gradient_arithmetic_one_param_style() {
        // w'' = w_final + (eta*m/b) * grad with a synthetic run log.
        let data = dataset(5, 20);
        let model0 = small_model(9);
        let cfg = TrainConfig { finetune_steps: 1, batch_size: 4, ..TrainConfig::quick(LossSpec::ce(), 0.1, 3) };
        let (model_final, run) = train(&model0, &data, &cfg).unwrap();
        let schedule = build_schedule(&data, &cfg).unwrap();
        let target = data.batch(&schedule.finetune[0]).unwrap();
        let single = target.single(0).unwrap();
        let m1 = single_gradient_unlearn(&run, &model_final, &single, 0.1, 2, 1, GradientPoint::AtFinal, TargetScope::SingleExample).unwrap();
        let m2 = single_gradient_unlearn(&run, &model_final, &single, 0.1, 2, 2, GradientPoint::AtFinal, TargetScope::SingleExample).unwrap();
        let g = grad(&model_final, &single, &cfg.loss).unwrap();
        let expect1 = model_final.params().add_scaled(0.1 / 2.0, &g).unwrap();
        assert!(m1.params().distance(&expect1).unwrap() < 1e-15);
        // m = 2 doubles the correction.
        let d1 = m1.params().sub(model_final.params()).unwrap();
        let d2 = m2.params().sub(model_final.params()).unwrap();
        assert!(d2.distance(&d1.scaled(2.0).unwrap()).unwrap() < 1e-15);
        assert!(single_gradient_unlearn(&run, &model_final, &single, 0.1, 2, 0, GradientPoint::AtFinal, TargetScope::SingleExample).is_err());
    }

    #[test]
    fn t1_whole_batch_at_initial_recovers_w0() {
        let data = dataset(6, 20);
        let model0 = small_model(10);
        let cfg = TrainConfig { finetune_steps: 1, batch_size: 4, ..TrainConfig::quick(LossSpec::ce(), 0.1, 3) };
        let (model_final, run) = train(&model0, &data, &cfg).unwrap();
        let schedule = build_schedule(&data, &cfg).unwrap();
        let target = data.batch(&schedule.finetune[0]).unwrap();
        let unlearned = single_gradient_unlearn(&run, &model_final, &target, 0.1, 4, 1, GradientPoint::AtInitial, TargetScope::WholeBatch).unwrap();
        assert!(unlearned.params().distance(model0.params()).unwrap() < 1e-12);
    }

    #[test]
    fn amnesiac_subtracts_logged_updates() {
        let data = dataset(7, 24);
        let model0 = small_model(11);
        let cfg = TrainConfig { log_updates: true, ..base_cfg() };
        let (model_final, run) = train(&model0, &data, &cfg).unwrap();
        assert_eq!(run.target_updates.len(), 1);
        let out = amnesiac_unlearn(&run, &model_final).unwrap();
        assert_eq!(out.updates_removed, 1);
        let expected = model_final
            .params()
            .add_scaled(-1.0, &run.target_updates[0].1)
            .unwrap();
        assert_eq!(out.model.params(), &expected);
    }

    #[test]
    fn amnesiac_requires_logging() {
        let data = dataset(8, 24);
        let model0 = small_model(12);
        let cfg = TrainConfig { log_updates: false, ..base_cfg() };
        let (model_final, run) = train(&model0, &data, &cfg).unwrap();
        assert!(matches!(amnesiac_unlearn(&run, &model_final), Err(Error::UpdateLogDisabled)));
    }

    #[test]
    fn amnesiac_noop_flag_on_empty_log() {
        let data = dataset(8, 24);
        let model0 = small_model(12);
        let cfg = TrainConfig { log_updates: true, ..base_cfg() };
        let (model_final, mut run) = train(&model0, &data, &cfg).unwrap();
        run.target_updates.clear();
        let out = amnesiac_unlearn(&run, &model_final).unwrap();
        assert_eq!(out.updates_removed, 0);
        assert_eq!(out.model.params(), model_final.params());
    }

    #[test]
    fn amnesiac_matches_single_gradient_when_target_leads() {
        // Target batch runs once at fine-tune step 0: both methods add back
        // the same gradient evaluated at the same weights.
        let data = dataset(9, 24);
        let model0 = small_model(13);
        let cfg = TrainConfig { pretrain_steps: 2, target_batch_index: 0, ..base_cfg() };
        let (model_final, run) = train(&model0, &data, &cfg).unwrap();
        let schedule = build_schedule(&data, &cfg).unwrap();
        let target = data.batch(&schedule.finetune[0]).unwrap();
        let a = amnesiac_unlearn(&run, &model_final).unwrap().model;
        let s = single_gradient_unlearn(&run, &model_final, &target, cfg.eta, cfg.batch_size, 1, GradientPoint::AtInitial, TargetScope::WholeBatch).unwrap();
        assert!(a.params().distance(s.params()).unwrap() < 1e-12);
    }

    #[test]
    fn retrain_skipping_only_batch_returns_w_n() {
        let data = dataset(10, 20);
        let model0 = small_model(14);
        let cfg = TrainConfig { finetune_steps: 1, batch_size: 4, ..TrainConfig::quick(LossSpec::ce(), 0.1, 3) };
        let (_, run) = train(&model0, &data, &cfg).unwrap();
        let model_n = model0.with_params(run.checkpoint(0).unwrap().clone()).unwrap();
        let retrained = retrain_oracle(&model_n, &data, &cfg, 0).unwrap();
        assert_eq!(retrained.params(), model_n.params());
    }

    #[test]
    fn verification_error_basics() {
        let a = ParamVector::new(vec![0.0, 3.0]).unwrap();
        let b = ParamVector::new(vec![4.0, 0.0]).unwrap();
        assert_eq!(verification_error(&a, &b).unwrap(), 5.0);
        assert_eq!(verification_error(&b, &a).unwrap(), 5.0);
        assert_eq!(verification_error(&a, &a).unwrap(), 0.0);
        let c = ParamVector::zeros(3);
        assert!(verification_error(&a, &c).is_err());
    }

    #[test]
    fn paired_t1_exactness() {
        let data = dataset(11, 20);
        let model0 = small_model(15);
        let cfg = TrainConfig { finetune_steps: 1, batch_size: 4, ..TrainConfig::quick(LossSpec::ce(), 0.1, 3) };
        let request = UnlearnRequest::default();
        let out = run_paired_experiment(&model0, &data, &cfg, &request, None).unwrap();
        assert_eq!(out.e, 0.0);
        assert!(out.v <= 1e-10, "v = {}", out.v);
    }

    #[test]
    fn paired_eta_zero() {
        let data = dataset(12, 20);
        let model0 = small_model(16);
        let cfg = TrainConfig { eta: 0.0, ..base_cfg() };
        let out = run_paired_experiment(&model0, &data, &cfg, &UnlearnRequest::default(), None).unwrap();
        assert_eq!(out.e, 0.0);
        assert_eq!(out.v, 0.0);
    }

    #[test]
    fn single_gradient_ignores_other_checkpoints() {
        let data = dataset(13, 24);
        let model0 = small_model(17);
        let cfg = TrainConfig { pretrain_steps: 2, ..base_cfg() };
        let (model_final, run) = train(&model0, &data, &cfg).unwrap();
        let schedule = build_schedule(&data, &cfg).unwrap();
        let target = data.batch(&schedule.finetune[0]).unwrap();
        let clean = single_gradient_unlearn(&run, &model_final, &target, cfg.eta, cfg.batch_size, 1, GradientPoint::AtInitial, TargetScope::WholeBatch).unwrap();
        // Poison every checkpoint except w_N; the result must not change.
        let mut poisoned = run.clone();
        let keep = poisoned.cfg.pretrain_steps;
        let keys: Vec<usize> = poisoned.checkpoints.keys().copied().collect();
        for k in keys {
            if k != keep {
                let len = poisoned.checkpoints[&k].len();
                poisoned.checkpoints.insert(k, ParamVector::new(vec![12345.0; len]).unwrap());
            }
        }
        let after = single_gradient_unlearn(&poisoned, &model_final, &target, cfg.eta, cfg.batch_size, 1, GradientPoint::AtInitial, TargetScope::WholeBatch).unwrap();
        assert_eq!(clean.params(), after.params());
    }

    #[test]
    fn trajectory_final_point_matches_summary() {
        let data = dataset(14, 30);
        let model0 = small_model(18);
        let cfg = TrainConfig { finetune_steps: 6, sigma_every: 2, batch_size: 4, ..TrainConfig::quick(LossSpec::ce(), 0.05, 21) };
        let out = run_paired_experiment(&model0, &data, &cfg, &UnlearnRequest::default(), Some(3)).unwrap();
        let last = out.trajectory.last().unwrap();
        assert!((last.e - out.e).abs() < 1e-12);
        assert!((last.v - out.v).abs() < 1e-12);
    }
}
