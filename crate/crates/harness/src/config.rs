//! Flat `key=value` configuration.
//!
//! One dotted key per line (`train.eta=0.05`), `#` comments, later keys
//! overriding earlier ones. Serialization sorts keys, so parse → serialize →
//! parse is the identity and the run id — an FNV-1a hash of the canonical
//! form — is stable across platforms.

use std::collections::BTreeMap;
use std::path::Path;

use unlearn_core::data::Dataset;
use unlearn_core::hessian::{HvpConfig, SigmaMode};
use unlearn_core::nn::{Activation, LossKind, LossSpec, ModelSpec};
use unlearn_core::unlearn::{GradientPoint, TrainConfig, UnlearnMethod, UnlearnRequest};

use crate::data::{gen_blobs, gen_moons, load_csv, load_idx};
use crate::error::{Error, Result};

/// Every key the harness understands, with its default (empty = no default).
pub const KNOWN_KEYS: &[(&str, &str)] = &[
    ("data.kind", "blobs"),
    ("data.n", "512"),
    ("data.classes", "2"),
    ("data.spread", "1.0"),
    ("data.noise", "0.2"),
    ("data.seed", "7"),
    ("data.path", ""),
    ("data.label_column", "label"),
    ("data.images", ""),
    ("data.labels", ""),
    ("data.max_n", "0"),
    ("model.layers", "2,16,16,2"),
    ("model.activation", "tanh"),
    ("train.eta", "0.05"),
    ("train.batch_size", "32"),
    ("train.pretrain_steps", "0"),
    ("train.finetune_steps", "500"),
    ("train.epochs_over_target", "1"),
    ("train.loss", "ce"),
    ("train.gamma", "0"),
    ("train.lambda", "0"),
    ("train.seed", "1"),
    ("train.sigma_every", "20"),
    ("train.log_updates", "true"),
    ("instrument.hvp_epsilon", "1e-5"),
    ("instrument.power_iters", "100"),
    ("instrument.power_tol", "1e-6"),
    ("instrument.probe_seed", "0"),
    ("instrument.sigma_mode", "spectral"),
    ("instrument.hvp_probe_batch", "0"),
    ("unlearn.method", "single_gradient"),
    ("unlearn.gradient_point", "at_initial"),
    ("unlearn.target_batch", "0"),
    ("experiment.sample_every", "20"),
    ("prs.bins", "20"),
    ("prs.smoothing", "1"),
    ("prs.shadow_seed", "101"),
    ("bounds.n_values", "2,3"),
    ("bounds.sigma_values", "0.05,0.1,0.5"),
    ("bounds.param_dims", "1,2"),
    ("bounds.eta", "0.1"),
    ("bounds.m_epochs", "1"),
    ("bounds.scenario_seed", "5"),
    ("bounds.grid_points", "0"),
    ("landscape.gammas", "0.01,0.1,1,5"),
    ("landscape.range", "4"),
    ("landscape.resolution", "41"),
    ("correlate.x", "e"),
    ("correlate.y", "v"),
    ("workers", "1"),
];

/// Grid keys (`plan.<train key>`) accepted in plans.
pub const PLAN_KEYS: &[&str] = &[
    "plan.eta",
    "plan.batch_size",
    "plan.pretrain_steps",
    "plan.finetune_steps",
    "plan.loss",
    "plan.gamma",
    "plan.lambda",
    "plan.seed",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` lines; unknown keys are rejected with the list of
    /// valid ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{line}'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let known =
            KNOWN_KEYS.iter().any(|(k, _)| *k == key) || PLAN_KEYS.contains(&key);
        if !known {
            let mut valid: Vec<&str> = KNOWN_KEYS.iter().map(|(k, _)| *k).collect();
            valid.extend(PLAN_KEYS);
            return Err(Error::Config(format!(
                "unknown key '{key}'; valid keys: {}",
                valid.join(", ")
            )));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Canonical serialization: sorted `key=value` lines.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// FNV-1a 64 over the canonical serialization, hex-encoded.
    pub fn run_id(&self) -> String {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x1000_0000_01b3;
        let mut hash = OFFSET;
        for byte in self.serialize().bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(PRIME);
        }
        format!("{hash:016x}")
    }

    pub fn get(&self, key: &str) -> Result<String> {
        if let Some(v) = self.entries.get(key) {
            return Ok(v.clone());
        }
        KNOWN_KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, d)| d.to_string())
            .ok_or_else(|| Error::Config(format!("no value or default for '{key}'")))
    }

    pub fn get_override(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        v.parse().map_err(|e| Error::Config(format!("{key}='{v}': {e}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse().map_err(|e| Error::Config(format!("{key}='{v}': {e}")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        let v = self.get(key)?;
        v.parse().map_err(|e| Error::Config(format!("{key}='{v}': {e}")))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        match self.get(key)?.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Config(format!("{key}='{other}': expected true/false"))),
        }
    }

    pub fn get_list(&self, key: &str) -> Result<Vec<String>> {
        Ok(self
            .get(key)?
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect())
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.get_list(key)?
            .iter()
            .map(|s| s.parse().map_err(|e| Error::Config(format!("{key}='{s}': {e}"))))
            .collect()
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Vec<usize>> {
        self.get_list(key)?
            .iter()
            .map(|s| s.parse().map_err(|e| Error::Config(format!("{key}='{s}': {e}"))))
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Fully resolved experiment inputs.
pub struct ExperimentSetup {
    pub dataset: Dataset,
    pub model_spec: ModelSpec,
    pub train: TrainConfig,
    pub request: UnlearnRequest,
    pub sample_every: Option<usize>,
    pub model_seed: u64,
}

impl ExperimentSetup {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let dataset = build_dataset(cfg)?;
        let model_spec = build_model_spec(cfg)?;
        let train = build_train_config(cfg)?;
        let request = UnlearnRequest {
            method: UnlearnMethod::parse(&cfg.get("unlearn.method")?)?,
            gradient_point: GradientPoint::parse(&cfg.get("unlearn.gradient_point")?)?,
            target_batch_index: cfg.get_usize("unlearn.target_batch")?,
        };
        let sample_every = match cfg.get_usize("experiment.sample_every")? {
            0 => None,
            every => Some(every),
        };
        if model_spec.input_dim() != dataset.n_features {
            return Err(Error::Config(format!(
                "model input width {} does not match the {}-feature dataset",
                model_spec.input_dim(),
                dataset.n_features
            )));
        }
        if model_spec.output_dim() < dataset.n_classes {
            return Err(Error::Config(format!(
                "model output width {} is below the dataset's {} classes",
                model_spec.output_dim(),
                dataset.n_classes
            )));
        }
        Ok(Self {
            dataset,
            model_spec,
            train,
            request,
            sample_every,
            model_seed: cfg.get_u64("train.seed")?,
        })
    }
}

pub fn build_dataset(cfg: &Config) -> Result<Dataset> {
    match cfg.get("data.kind")?.as_str() {
        "blobs" => gen_blobs(
            cfg.get_usize("data.n")?,
            cfg.get_usize("data.classes")?,
            cfg.get_f64("data.spread")?,
            cfg.get_u64("data.seed")?,
        ),
        "moons" => gen_moons(cfg.get_usize("data.n")?, cfg.get_f64("data.noise")?, cfg.get_u64("data.seed")?),
        "csv" => load_csv(Path::new(&cfg.get("data.path")?), &cfg.get("data.label_column")?),
        "idx" => {
            let max_n = match cfg.get_usize("data.max_n")? {
                0 => None,
                m => Some(m),
            };
            load_idx(
                Path::new(&cfg.get("data.images")?),
                Path::new(&cfg.get("data.labels")?),
                max_n,
            )
        }
        other => Err(Error::Config(format!("unknown data.kind '{other}'"))),
    }
}

pub fn build_model_spec(cfg: &Config) -> Result<ModelSpec> {
    let layers = cfg.get_usize_list("model.layers")?;
    let activation = Activation::parse(&cfg.get("model.activation")?)?;
    Ok(ModelSpec::mlp(&layers, activation)?)
}

pub fn build_train_config(cfg: &Config) -> Result<TrainConfig> {
    let kind = LossKind::parse(&cfg.get("train.loss")?)?;
    let loss = LossSpec {
        kind,
        gamma: cfg.get_f64("train.gamma")?,
        lambda: cfg.get_f64("train.lambda")?,
    };
    let sigma_mode = match cfg.get("instrument.sigma_mode")?.as_str() {
        "spectral" => SigmaMode::SpectralNorm,
        "sqrt_spectral" => SigmaMode::SqrtSpectralNorm,
        other => return Err(Error::Config(format!("unknown sigma_mode '{other}'"))),
    };
    let hvp = HvpConfig {
        epsilon_scale: cfg.get_f64("instrument.hvp_epsilon")?,
        power_iters_max: cfg.get_usize("instrument.power_iters")?,
        power_tol: cfg.get_f64("instrument.power_tol")?,
        probe_seed: cfg.get_u64("instrument.probe_seed")?,
        sigma_mode,
    };
    Ok(TrainConfig {
        eta: cfg.get_f64("train.eta")?,
        batch_size: cfg.get_usize("train.batch_size")?,
        pretrain_steps: cfg.get_usize("train.pretrain_steps")?,
        finetune_steps: cfg.get_usize("train.finetune_steps")?,
        epochs_over_target: cfg.get_usize("train.epochs_over_target")?,
        loss,
        seed: cfg.get_u64("train.seed")?,
        sigma_every: cfg.get_usize("train.sigma_every")?,
        log_updates: cfg.get_bool("train.log_updates")?,
        target_batch_index: cfg.get_usize("unlearn.target_batch")?,
        hvp,
        hvp_probe_batch: match cfg.get_usize("instrument.hvp_probe_batch")? {
            0 => None,
            k => Some(k),
        },
    })
}
