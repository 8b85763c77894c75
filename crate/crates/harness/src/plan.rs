//! Experiment plans: a Cartesian grid of configs executed with caching.
//!
//! `plan.<key>=a,b,c` entries expand into one concrete config per grid cell
//! by overriding `train.<key>`; each cell's run id names its directory, and
//! a completed cell (its `row.csv` exists) is never recomputed.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{Config, PLAN_KEYS};
use crate::error::{Error, Result};
use crate::pipeline::run_verify;
use crate::report::Table;

pub const RESULT_COLUMNS: &[&str] = &[
    "run_id",
    "status",
    "loss",
    "gamma",
    "lambda",
    "eta",
    "batch_size",
    "pretrain_steps",
    "finetune_steps",
    "seed",
    "method",
    "gradient_point",
    "e",
    "v",
    "accuracy",
    "delta_w",
    "sigma_avg",
];

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub base: Config,
    /// `(train key suffix, values)` in deterministic key order.
    pub grid: Vec<(String, Vec<String>)>,
    pub out: PathBuf,
}

impl ExperimentPlan {
    /// Extracts the grid from the `plan.*` keys actually set in `cfg`.
    pub fn from_config(cfg: &Config, out: &Path) -> Result<Self> {
        let mut grid = Vec::new();
        for plan_key in PLAN_KEYS {
            if let Some(values) = cfg.get_override(plan_key) {
                let values: Vec<String> =
                    values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
                if values.is_empty() {
                    return Err(Error::Config(format!("{plan_key} lists no values")));
                }
                let suffix = plan_key.trim_start_matches("plan.").to_string();
                grid.push((suffix, values));
            }
        }
        if grid.is_empty() {
            return Err(Error::Config("a plan needs at least one plan.* grid key".into()));
        }
        let mut base = Config::new();
        for (k, v) in cfg.entries() {
            if !k.starts_with("plan.") {
                base.set(k, v)?;
            }
        }
        Ok(Self { base, grid, out: out.to_path_buf() })
    }

    /// Expands the grid into concrete per-cell configs.
    pub fn cells(&self) -> Result<Vec<Config>> {
        let mut cells = vec![self.base.clone()];
        for (suffix, values) in &self.grid {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for cell in &cells {
                for value in values {
                    let mut cfg = cell.clone();
                    cfg.set(&format!("train.{suffix}"), value)?;
                    next.push(cfg);
                }
            }
            cells = next;
        }
        Ok(cells)
    }
}

/// Outcome counters of a plan execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanStats {
    pub executed: usize,
    pub cached: usize,
    pub failed: usize,
}

fn cell_row(cfg: &Config, outcome: std::result::Result<&crate::pipeline::VerifySummary, &Error>) -> Vec<String> {
    let field = |key: &str| cfg.get(key).unwrap_or_default();
    let (status, e, v, accuracy, delta_w, sigma_avg) = match outcome {
        Ok(s) => (
            "ok".to_string(),
            s.e.to_string(),
            if s.v.is_finite() { s.v.to_string() } else { String::new() },
            s.accuracy.to_string(),
            s.delta_w.to_string(),
            s.sigma_avg.to_string(),
        ),
        Err(err) => {
            let msg = format!("{err}").replace(',', ";").replace('\n', " ");
            (format!("error:{msg}"), String::new(), String::new(), String::new(), String::new(), String::new())
        }
    };
    vec![
        cfg.run_id(),
        status,
        field("train.loss"),
        field("train.gamma"),
        field("train.lambda"),
        field("train.eta"),
        field("train.batch_size"),
        field("train.pretrain_steps"),
        field("train.finetune_steps"),
        field("train.seed"),
        field("unlearn.method"),
        field("unlearn.gradient_point"),
        e,
        v,
        accuracy,
        delta_w,
        sigma_avg,
    ]
}

/// `(row, cached, failed)` for one executed or cache-hit cell.
type CellOutcome = (Vec<String>, bool, bool);

fn run_cell(cfg: &Config, out: &Path) -> CellOutcome {
    let cache = out.join(cfg.run_id()).join("row.csv");
    if cache.exists() {
        if let Ok(table) = Table::read(&cache) {
            if table.columns == RESULT_COLUMNS && table.rows.len() == 1 {
                return (table.rows[0].clone(), true, false);
            }
        }
    }
    match run_verify(cfg, out) {
        Ok(summary) => {
            let row = cell_row(cfg, Ok(&summary));
            let mut single = Table::new(RESULT_COLUMNS);
            single.push(row.clone());
            let _ = single.write(&cache);
            (row, false, false)
        }
        Err(err) => (cell_row(cfg, Err(&err)), false, true),
    }
}

/// Executes every cell (up to `workers` in parallel), appends rows in cell
/// order, and writes `<out>/results.csv`.
pub fn run_plan(plan: &ExperimentPlan, workers: usize) -> Result<(Table, PlanStats)> {
    let cells = plan.cells()?;
    std::fs::create_dir_all(&plan.out)?;
    let workers = workers.max(1).min(cells.len().max(1));

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; cells.len()]);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= cells.len() {
                    break;
                }
                let outcome = run_cell(&cells[idx], &plan.out);
                results.lock().expect("poisoned")[idx] = Some(outcome);
            });
        }
    });

    let collected = results.into_inner().expect("poisoned");
    let mut table = Table::new(RESULT_COLUMNS);
    let mut stats = PlanStats { executed: 0, cached: 0, failed: 0 };
    for entry in collected {
        let (row, cached, failed) = entry.expect("every cell claimed");
        if cached {
            stats.cached += 1;
        } else if failed {
            stats.failed += 1;
        } else {
            stats.executed += 1;
        }
        table.push(row);
    }
    table.write(&plan.out.join("results.csv"))?;
    Ok((table, stats))
}
