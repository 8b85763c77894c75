//! Deterministic batch scheduling.
//!
//! The whole experiment protocol hangs on replayability: `train` and the
//! retraining oracle must walk the same batch sequence. A schedule is fully
//! determined by `(dataset split, TrainConfig)` — batches are drawn from a
//! ChaCha stream seeded by `cfg.seed`, and the target batch is written into
//! its `m` recurrence slots afterwards.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::unlearn::TrainConfig;

/// Salt so the schedule stream differs from other per-seed streams.
const SCHEDULE_SALT: u64 = 0x7363_6865_6475_6c65; // "schedule"

/// Batch index lists for every pretrain and fine-tune step.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSchedule {
    /// One list of dataset row indices per pretrain step.
    pub pretrain: Vec<Vec<usize>>,
    /// One list per fine-tune step.
    pub finetune: Vec<Vec<usize>>,
    /// Fine-tune step indices holding the target batch, ascending.
    pub target_steps: Vec<usize>,
}

/// Builds the deterministic schedule for a config over a dataset split.
pub fn build_schedule(data: &Dataset, cfg: &TrainConfig) -> Result<BatchSchedule> {
    let n_train = data.train_idx.len();
    if n_train == 0 {
        return Err(Error::Argument("dataset has no training rows".into()));
    }
    if cfg.batch_size > n_train {
        return Err(Error::Argument(format!(
            "batch size {} exceeds the {} training rows",
            cfg.batch_size, n_train
        )));
    }
    if cfg.target_batch_index >= cfg.finetune_steps {
        return Err(Error::Argument(format!(
            "target batch index {} out of range for {} fine-tune steps",
            cfg.target_batch_index, cfg.finetune_steps
        )));
    }
    if cfg.epochs_over_target > cfg.finetune_steps {
        return Err(Error::Argument(format!(
            "cannot place {} target recurrences in {} fine-tune steps",
            cfg.epochs_over_target, cfg.finetune_steps
        )));
    }

    let mut stream = rng::seeded(cfg.seed ^ SCHEDULE_SALT);
    let draw = |stream: &mut rng::SeededRng| -> Vec<usize> {
        rng::sample_indices(stream, n_train, cfg.batch_size)
            .into_iter()
            .map(|p| data.train_idx[p])
            .collect()
    };

    let pretrain: Vec<Vec<usize>> = (0..cfg.pretrain_steps).map(|_| draw(&mut stream)).collect();
    let mut finetune: Vec<Vec<usize>> =
        (0..cfg.finetune_steps).map(|_| draw(&mut stream)).collect();

    // Evenly spaced recurrences of the target batch content, starting at its
    // home position.
    let t = cfg.finetune_steps;
    let spacing = t / cfg.epochs_over_target;
    let mut target_steps: Vec<usize> = (0..cfg.epochs_over_target)
        .map(|j| (cfg.target_batch_index + j * spacing) % t)
        .collect();
    target_steps.sort_unstable();
    target_steps.dedup();
    if target_steps.len() != cfg.epochs_over_target {
        return Err(Error::Argument(format!(
            "target recurrence placement collides: m={} over t={}",
            cfg.epochs_over_target, t
        )));
    }
    let target_content = finetune[cfg.target_batch_index].clone();
    for &step in &target_steps {
        finetune[step] = target_content.clone();
    }

    Ok(BatchSchedule { pretrain, finetune, target_steps })
}
