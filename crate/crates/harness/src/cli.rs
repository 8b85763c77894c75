//! Command-line interface.
//!
//! ```text
//! unlearn <command> [--config PATH] [--out DIR] [--seed N] [--workers N] [key=value ...]
//! ```
//!
//! Trailing `key=value` arguments override config keys. Every command exits
//! 0 on success; failures print one machine-readable JSON record on stderr
//! and exit nonzero.

use std::path::PathBuf;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::pipeline;
use crate::plan::ExperimentPlan;
use crate::report::Table;

const USAGE: &str = "usage: unlearn <train|unlearn|verify|correlate|bounds|landscape|prs|plan> \
[--config PATH] [--out DIR] [--seed N] [--workers N] [key=value ...]";

#[derive(Debug, Clone)]
pub struct CliArgs {
    pub command: String,
    pub config: Config,
    pub out: PathBuf,
    pub workers: usize,
}

pub fn parse_args(args: &[String]) -> Result<CliArgs> {
    let mut iter = args.iter();
    let command = iter
        .next()
        .ok_or_else(|| Error::Config(USAGE.to_string()))?
        .clone();
    let mut config = Config::new();
    let mut out = PathBuf::from("out");
    let mut workers = 1usize;
    let mut overrides: Vec<(String, String)> = Vec::new();

    let mut pending = iter.collect::<Vec<_>>();
    pending.reverse();
    while let Some(arg) = pending.pop() {
        let mut take_value = |name: &str| -> Result<String> {
            pending
                .pop()
                .cloned()
                .ok_or_else(|| Error::Config(format!("{name} needs a value\n{USAGE}")))
        };
        match arg.as_str() {
            "--config" => {
                let path = take_value("--config")?;
                config = Config::load(std::path::Path::new(&path))?;
            }
            "--out" => out = PathBuf::from(take_value("--out")?),
            "--seed" => {
                let seed = take_value("--seed")?;
                overrides.push(("train.seed".into(), seed));
            }
            "--workers" => {
                let w = take_value("--workers")?;
                workers = w
                    .parse()
                    .map_err(|e| Error::Config(format!("--workers '{w}': {e}")))?;
            }
            "--help" | "-h" => return Err(Error::Config(USAGE.to_string())),
            other => match other.split_once('=') {
                Some((key, value)) => overrides.push((key.to_string(), value.to_string())),
                None => {
                    return Err(Error::Config(format!("unexpected argument '{other}'\n{USAGE}")))
                }
            },
        }
    }
    for (key, value) in overrides {
        config.set(&key, &value)?;
    }
    Ok(CliArgs { command, config, out, workers })
}

/// Runs one command; the returned lines go to stdout.
pub fn execute(args: &CliArgs) -> Result<Vec<String>> {
    std::fs::create_dir_all(&args.out)?;
    match args.command.as_str() {
        "train" => {
            let s = pipeline::run_train(&args.config, &args.out)?;
            Ok(vec![format!(
                "run {} trained: e={} delta_w={} sigma_avg={} accuracy={}",
                s.run_id, s.e, s.delta_w, s.sigma_avg, s.accuracy
            )])
        }
        "unlearn" => {
            let s = pipeline::run_unlearn(&args.config, &args.out)?;
            Ok(vec![format!(
                "run {} unlearned: e={} accuracy={} (checkpoints in {})",
                s.run_id,
                s.e,
                s.accuracy,
                s.dir.display()
            )])
        }
        "verify" => {
            let s = pipeline::run_verify(&args.config, &args.out)?;
            Ok(vec![format!(
                "run {}: e={} v={} accuracy={}",
                s.run_id, s.e, s.v, s.accuracy
            )])
        }
        "correlate" => {
            let x = args.config.get("correlate.x")?;
            let y = args.config.get("correlate.y")?;
            let table = Table::read(&args.out.join("results.csv"))?;
            let (p, s) = pipeline::correlate_results(&table, &x, &y, &args.out)?;
            Ok(vec![format!("pearson({x},{y})={p} spearman({x},{y})={s}")])
        }
        "bounds" => {
            let rows = pipeline::run_bounds(&args.config, &args.out)?;
            let mut lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "scenario n={} dim={} sigma={}: bound_holds={} corollary_holds={} reverse_holds={} v<=d={}",
                        r.n, r.dim, r.sigma, r.lemma_holds, r.corollary_holds, r.reverse_holds, r.improves
                    )
                })
                .collect();
            let all = rows.iter().all(|r| r.lemma_holds && r.corollary_holds && r.reverse_holds);
            lines.push(format!("all_bounds_hold={all}"));
            Ok(lines)
        }
        "landscape" => {
            let files = pipeline::run_landscape(&args.config, &args.out)?;
            Ok(files.into_iter().map(|p| format!("wrote {}", p.display())).collect())
        }
        "prs" => {
            let s = pipeline::run_prs(&args.config, &args.out)?;
            Ok(vec![format!(
                "run {}: member_prs={} nonmember_prs={} target_before={} target_after={}",
                s.run_id,
                s.mean_member_prs,
                s.mean_nonmember_prs,
                s.target_prs_before,
                s.target_prs_after
            )])
        }
        "plan" => {
            let plan = ExperimentPlan::from_config(&args.config, &args.out)?;
            let (table, stats) = crate::plan::run_plan(&plan, args.workers)?;
            Ok(vec![format!(
                "plan complete: {} cells ({} executed, {} cached, {} failed) -> {}",
                table.rows.len(),
                stats.executed,
                stats.cached,
                stats.failed,
                plan.out.join("results.csv").display()
            )])
        }
        other => Err(Error::Config(format!("unknown command '{other}'\n{USAGE}"))),
    }
}
