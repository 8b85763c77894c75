//! Single-run pipelines behind the CLI subcommands.
//!
//! Every run owns a directory `<out>/<run-id>/` holding `config.txt`,
//! `runlog.csv`, `checkpoints/`, `report.jsonl`, and `plots/`. Nothing
//! written here depends on wall-clock state, so reruns with the same config
//! are byte-identical.

use std::path::{Path, PathBuf};

use unlearn_core::analysis::bounds::{
    check_corollary1, check_lemma1, check_reverse_bound, BoundScenario, GridSpec, UnlearnRule,
};
use unlearn_core::analysis::prs::{fit_shadow_prs, prs_for_model};
use unlearn_core::analysis::{landscape_grid, pearson, spearman};
use unlearn_core::io::{write_checkpoint, write_runlog_csv};
use unlearn_core::nn::Model;
use unlearn_core::objective::Quadratic;
use unlearn_core::rng;
use unlearn_core::unlearn::{run_paired_experiment, PairedResult};

use crate::config::{Config, ExperimentSetup};
use crate::error::{Error, Result};
use crate::report::{json_record, svg_scatter, write_text, JsonValue, Table};

/// Creates `<out>/<run-id>/` with the canonical config and subdirectories.
pub fn prepare_run_dir(out: &Path, cfg: &Config) -> Result<PathBuf> {
    let dir = out.join(cfg.run_id());
    std::fs::create_dir_all(dir.join("checkpoints"))?;
    std::fs::create_dir_all(dir.join("plots"))?;
    write_text(&dir.join("config.txt"), &cfg.serialize())?;
    Ok(dir)
}

/// Outcome summary of one paired run.
#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub run_id: String,
    pub dir: PathBuf,
    pub e: f64,
    pub v: f64,
    pub accuracy: f64,
    pub delta_w: f64,
    pub sigma_avg: f64,
    pub trajectory_len: usize,
}

fn write_trajectory(dir: &Path, paired: &PairedResult) -> Result<()> {
    let mut table = Table::new(&["step", "e", "v"]);
    for p in &paired.trajectory {
        table.push(vec![p.step.to_string(), p.e.to_string(), p.v.to_string()]);
    }
    table.write(&dir.join("trajectory.csv"))
}

/// Runs the full paired experiment (train, retrain, unlearn) and writes all
/// run artifacts.
pub fn run_verify(cfg: &Config, out: &Path) -> Result<VerifySummary> {
    let setup = ExperimentSetup::from_config(cfg)?;
    let model0 = Model::init(setup.model_spec.clone(), setup.model_seed);
    let paired =
        run_paired_experiment(&model0, &setup.dataset, &setup.train, &setup.request, setup.sample_every)?;

    let dir = prepare_run_dir(out, cfg)?;
    write_runlog_csv(&dir.join("runlog.csv"), &paired.run)?;
    let n = setup.train.pretrain_steps;
    let t = setup.train.finetune_steps;
    write_checkpoint(&dir.join("checkpoints/initial.uwgt"), paired.run.checkpoint(0)?)?;
    write_checkpoint(&dir.join("checkpoints/pretrained.uwgt"), paired.run.checkpoint(n)?)?;
    write_checkpoint(&dir.join("checkpoints/final.uwgt"), paired.run.checkpoint(n + t)?)?;
    write_checkpoint(&dir.join("checkpoints/retrained.uwgt"), paired.model_retrained.params())?;
    write_checkpoint(&dir.join("checkpoints/unlearned.uwgt"), paired.model_unlearned.params())?;
    write_trajectory(&dir, &paired)?;

    let summary = VerifySummary {
        run_id: cfg.run_id(),
        dir: dir.clone(),
        e: paired.e,
        v: paired.v,
        accuracy: paired.accuracy,
        delta_w: paired.run.delta_w_final()?,
        sigma_avg: paired.run.sigma_avg().unwrap_or(0.0),
        trajectory_len: paired.trajectory.len(),
    };
    let record = json_record(&[
        ("kind", JsonValue::from("verify")),
        ("run_id", JsonValue::from(summary.run_id.clone())),
        ("e", JsonValue::from(summary.e)),
        ("v", JsonValue::from(summary.v)),
        ("accuracy", JsonValue::from(summary.accuracy)),
        ("delta_w", JsonValue::from(summary.delta_w)),
        ("sigma_avg", JsonValue::from(summary.sigma_avg)),
        ("method", JsonValue::from(setup.request.method.as_str())),
        ("gradient_point", JsonValue::from(setup.request.gradient_point.as_str())),
    ]);
    write_text(&dir.join("report.jsonl"), &(record + "\n"))?;

    if paired.trajectory.len() >= 2 {
        let points: Vec<(f64, f64)> = paired.trajectory.iter().map(|p| (p.e, p.v)).collect();
        let svg = svg_scatter(&points, "unlearning error e", "verification error v", "e vs v along fine-tune");
        write_text(&dir.join("plots/e_vs_v.svg"), &svg)?;
    }
    Ok(summary)
}

/// Train-only run: instrumentation and checkpoints, no retrain pair.
pub fn run_train(cfg: &Config, out: &Path) -> Result<VerifySummary> {
    let setup = ExperimentSetup::from_config(cfg)?;
    let model0 = Model::init(setup.model_spec.clone(), setup.model_seed);
    let (model_final, run) = unlearn_core::unlearn::train(&model0, &setup.dataset, &setup.train)?;
    let dir = prepare_run_dir(out, cfg)?;
    write_runlog_csv(&dir.join("runlog.csv"), &run)?;
    let n = setup.train.pretrain_steps;
    let t = setup.train.finetune_steps;
    write_checkpoint(&dir.join("checkpoints/initial.uwgt"), run.checkpoint(0)?)?;
    write_checkpoint(&dir.join("checkpoints/pretrained.uwgt"), run.checkpoint(n)?)?;
    write_checkpoint(&dir.join("checkpoints/final.uwgt"), run.checkpoint(n + t)?)?;
    let accuracy = unlearn_core::nn::accuracy(&model_final, &setup.dataset.test_batch()?)?;
    let summary = VerifySummary {
        run_id: cfg.run_id(),
        dir: dir.clone(),
        e: run.unlearning_error()?,
        v: f64::NAN,
        accuracy,
        delta_w: run.delta_w_final()?,
        sigma_avg: run.sigma_avg().unwrap_or(0.0),
        trajectory_len: 0,
    };
    let record = json_record(&[
        ("kind", JsonValue::from("train")),
        ("run_id", JsonValue::from(summary.run_id.clone())),
        ("e", JsonValue::from(summary.e)),
        ("accuracy", JsonValue::from(summary.accuracy)),
        ("delta_w", JsonValue::from(summary.delta_w)),
        ("sigma_avg", JsonValue::from(summary.sigma_avg)),
    ]);
    write_text(&dir.join("report.jsonl"), &(record + "\n"))?;
    Ok(summary)
}

/// Train plus unlearn, without the retraining oracle.
pub fn run_unlearn(cfg: &Config, out: &Path) -> Result<VerifySummary> {
    // The paired experiment already produces the unlearned weights; reuse it
    // but report without v (the point of `unlearn` is the artifact).
    let mut summary = run_verify(cfg, out)?;
    summary.v = f64::NAN;
    Ok(summary)
}

/// PRS pipeline summary.
#[derive(Debug, Clone)]
pub struct PrsSummary {
    pub run_id: String,
    pub dir: PathBuf,
    pub mean_member_prs: f64,
    pub mean_nonmember_prs: f64,
    pub target_prs_before: f64,
    pub target_prs_after: f64,
    pub accuracy: f64,
}

/// Shadow-model PRS: fits the attack, scores members against non-members on
/// the target model, and reports the target batch's PRS before and after
/// unlearning (no directional claim).
pub fn run_prs(cfg: &Config, out: &Path) -> Result<PrsSummary> {
    let setup = ExperimentSetup::from_config(cfg)?;
    let model0 = Model::init(setup.model_spec.clone(), setup.model_seed);
    let paired =
        run_paired_experiment(&model0, &setup.dataset, &setup.train, &setup.request, None)?;

    let bins = cfg.get_usize("prs.bins")?;
    let smoothing = cfg.get_f64("prs.smoothing")?;
    let shadow_seed = cfg.get_u64("prs.shadow_seed")?;
    let mut shadow_train = setup.train.clone();
    shadow_train.seed = shadow_seed;
    let prs = fit_shadow_prs(&setup.dataset, &setup.model_spec, &shadow_train, bins, smoothing, shadow_seed)?;

    let member_batch = setup.dataset.batch(&setup.dataset.train_idx)?;
    let nonmember_batch = setup.dataset.batch(&setup.dataset.test_idx)?;
    let mean = |scores: &[f64]| scores.iter().sum::<f64>() / scores.len() as f64;
    let member_scores = prs_for_model(&prs, &paired.model_final, &member_batch)?;
    let nonmember_scores = prs_for_model(&prs, &paired.model_final, &nonmember_batch)?;
    let before = prs_for_model(&prs, &paired.model_final, &paired.target_batch)?;
    let after = prs_for_model(&prs, &paired.model_unlearned, &paired.target_batch)?;

    for scores in [&member_scores, &nonmember_scores, &before, &after] {
        if scores.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Data("PRS left the unit interval".into()));
        }
    }

    let dir = prepare_run_dir(out, cfg)?;
    let summary = PrsSummary {
        run_id: cfg.run_id(),
        dir: dir.clone(),
        mean_member_prs: mean(&member_scores),
        mean_nonmember_prs: mean(&nonmember_scores),
        target_prs_before: mean(&before),
        target_prs_after: mean(&after),
        accuracy: paired.accuracy,
    };
    let record = json_record(&[
        ("kind", JsonValue::from("prs")),
        ("run_id", JsonValue::from(summary.run_id.clone())),
        ("mean_member_prs", JsonValue::from(summary.mean_member_prs)),
        ("mean_nonmember_prs", JsonValue::from(summary.mean_nonmember_prs)),
        ("target_prs_before", JsonValue::from(summary.target_prs_before)),
        ("target_prs_after", JsonValue::from(summary.target_prs_after)),
        ("accuracy", JsonValue::from(summary.accuracy)),
        ("gamma", JsonValue::from(setup.train.loss.gamma)),
    ]);
    write_text(&dir.join("report.jsonl"), &(record + "\n"))?;
    Ok(summary)
}

/// One row of the bound-check report.
#[derive(Debug, Clone)]
pub struct BoundsRow {
    pub n: usize,
    pub dim: usize,
    pub sigma: f64,
    pub lemma_holds: bool,
    pub corollary_holds: bool,
    pub reverse_holds: bool,
    pub improves: bool,
    pub d: f64,
    pub v: f64,
}

/// Builds the seeded scenario grid from the `bounds.*` keys.
pub fn scenario_grid(cfg: &Config) -> Result<Vec<BoundScenario>> {
    let ns = cfg.get_usize_list("bounds.n_values")?;
    let sigmas = cfg.get_f64_list("bounds.sigma_values")?;
    let dims = cfg.get_usize_list("bounds.param_dims")?;
    let eta = cfg.get_f64("bounds.eta")?;
    let m_epochs = cfg.get_usize("bounds.m_epochs")?;
    let seed = cfg.get_u64("bounds.scenario_seed")?;
    let grid = match cfg.get_usize("bounds.grid_points")? {
        0 => GridSpec::Auto,
        p => GridSpec::AutoWithPoints(p),
    };

    let mut stream = rng::seeded(seed);
    let mut scenarios = Vec::new();
    for &n in &ns {
        for &dim in &dims {
            for &sigma in &sigmas {
                let points = (0..n)
                    .map(|_| {
                        let curvature: Vec<f64> = (0..dim)
                            .map(|_| 0.3 + 1.2 * rand::Rng::random::<f64>(&mut stream))
                            .collect();
                        let center: Vec<f64> = (0..dim)
                            .map(|_| 2.0 * rand::Rng::random::<f64>(&mut stream) - 1.0)
                            .collect();
                        Quadratic::new(curvature, center).map_err(Error::from)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let w0: Vec<f64> = (0..dim)
                    .map(|_| rand::Rng::random::<f64>(&mut stream) - 0.5)
                    .collect();
                scenarios.push(BoundScenario {
                    points,
                    target_index: 0,
                    w0,
                    eta,
                    m_epochs,
                    noise_sigma: sigma,
                    grid: grid.clone(),
                });
            }
        }
    }
    Ok(scenarios)
}

/// Runs the lemma, corollary, and reverse-bound checks over the scenario
/// grid, writing `bounds.csv` and `report.jsonl`.
pub fn run_bounds(cfg: &Config, out: &Path) -> Result<Vec<BoundsRow>> {
    let scenarios = scenario_grid(cfg)?;
    let dir = prepare_run_dir(out, cfg)?;
    let mut table = Table::new(&[
        "n", "dim", "sigma", "lemma_holds", "corollary_holds", "reverse_holds", "improves",
        "sup_diff", "lipschitz", "d", "v",
    ]);
    let mut rows = Vec::new();
    let mut reports = String::new();
    for scn in &scenarios {
        let lemma = check_lemma1(scn)?;
        let coro = check_corollary1(scn, UnlearnRule::SingleGradientAtInit)?;
        let rev = check_reverse_bound(scn, UnlearnRule::SingleGradientAtInit)?;
        let row = BoundsRow {
            n: scn.points.len(),
            dim: scn.dim(),
            sigma: scn.noise_sigma,
            lemma_holds: lemma.bound_holds,
            corollary_holds: coro.bound_holds,
            reverse_holds: rev.holds,
            improves: coro.improves,
            d: lemma.mean_shift,
            v: coro.mean_residual,
        };
        table.push(vec![
            row.n.to_string(),
            row.dim.to_string(),
            row.sigma.to_string(),
            row.lemma_holds.to_string(),
            row.corollary_holds.to_string(),
            row.reverse_holds.to_string(),
            row.improves.to_string(),
            lemma.sup_diff.to_string(),
            lemma.lipschitz.to_string(),
            row.d.to_string(),
            row.v.to_string(),
        ]);
        reports.push_str(&json_record(&[
            ("kind", JsonValue::from("bounds")),
            ("n", JsonValue::from(row.n)),
            ("dim", JsonValue::from(row.dim)),
            ("sigma", JsonValue::from(row.sigma)),
            ("lemma_holds", JsonValue::from(row.lemma_holds)),
            ("corollary_holds", JsonValue::from(row.corollary_holds)),
            ("reverse_holds", JsonValue::from(row.reverse_holds)),
            ("improves", JsonValue::from(row.improves)),
            ("sup_diff", JsonValue::from(lemma.sup_diff)),
            ("lipschitz", JsonValue::from(lemma.lipschitz)),
            ("d", JsonValue::from(row.d)),
            ("v", JsonValue::from(row.v)),
        ]));
        reports.push('\n');
        rows.push(row);
    }
    table.write(&dir.join("bounds.csv"))?;
    write_text(&dir.join("report.jsonl"), &reports)?;
    Ok(rows)
}

/// Emits one landscape CSV per γ value; returns the written paths.
pub fn run_landscape(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let gammas = cfg.get_f64_list("landscape.gammas")?;
    let range = cfg.get_f64("landscape.range")?;
    let resolution = cfg.get_usize("landscape.resolution")?;
    let dir = prepare_run_dir(out, cfg)?;
    let mut written = Vec::new();
    for gamma in gammas {
        let cells = landscape_grid(gamma, (-range, range), (-range, range), resolution)?;
        let mut table = Table::new(&["a", "b", "loss", "ga", "gb"]);
        for c in cells {
            table.push(vec![
                c.a.to_string(),
                c.b.to_string(),
                c.loss.to_string(),
                c.neg_grad_a.to_string(),
                c.neg_grad_b.to_string(),
            ]);
        }
        let path = dir.join(format!("landscape_gamma{gamma}.csv"));
        table.write(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Correlates two numeric columns of a results table and writes scatter
/// artifacts next to it.
pub fn correlate_results(
    table: &Table,
    x_col: &str,
    y_col: &str,
    out: &Path,
) -> Result<(f64, f64)> {
    let (xs, ys) = table.paired_columns(x_col, y_col)?;
    if xs.len() < 3 {
        return Err(Error::Data(format!(
            "correlation needs at least 3 finite rows, got {}",
            xs.len()
        )));
    }
    let p = pearson(&xs, &ys)?;
    let s = spearman(&xs, &ys)?;
    let mut scatter = Table::new(&[x_col, y_col]);
    for (x, y) in xs.iter().zip(&ys) {
        scatter.push(vec![x.to_string(), y.to_string()]);
    }
    std::fs::create_dir_all(out)?;
    scatter.write(&out.join(format!("scatter_{x_col}_{y_col}.csv")))?;
    let caption = format!("{y_col} vs {x_col} (pearson {p:.4}, spearman {s:.4})");
    let svg = svg_scatter(
        &xs.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>(),
        x_col,
        y_col,
        &caption,
    );
    write_text(&out.join(format!("scatter_{x_col}_{y_col}.svg")), &svg)?;
    Ok((p, s))
}
