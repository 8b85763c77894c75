//! End-to-end tests of the `unlearn` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn unlearn_bin() -> &'static str {
    env!("CARGO_BIN_EXE_unlearn")
}

fn run(args: &[&str]) -> Output {
    Command::new(unlearn_bin()).args(args).output().expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("unlearn-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn verify_on_t1_fixture_reports_exact_unlearning() {
    let out = scratch("t1");
    let output = run(&[
        "verify",
        "--out",
        out.to_str().unwrap(),
        "data.n=64",
        "model.layers=2,8,2",
        "train.finetune_steps=1",
        "train.batch_size=4",
        "experiment.sample_every=0",
    ]);
    let text = stdout_of(&output);
    assert!(text.contains("e=0 "), "expected e=0 in: {text}");
    let v: f64 = text
        .split("v=")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(v <= 1e-10, "v = {v}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn bounds_prints_bound_holds() {
    let out = scratch("bounds");
    let output = run(&[
        "bounds",
        "--out",
        out.to_str().unwrap(),
        "bounds.n_values=2",
        "bounds.sigma_values=0.1",
        "bounds.param_dims=1",
    ]);
    let text = stdout_of(&output);
    assert!(text.contains("bound_holds=true"), "{text}");
    assert!(text.contains("all_bounds_hold=true"), "{text}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn landscape_writes_one_csv_per_gamma() {
    let out = scratch("landscape");
    let output = run(&[
        "landscape",
        "--out",
        out.to_str().unwrap(),
        "landscape.gammas=0.01,0.1,1,5",
        "landscape.resolution=5",
    ]);
    let text = stdout_of(&output);
    assert_eq!(text.lines().filter(|l| l.starts_with("wrote ")).count(), 4);
    let run_dir = std::fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let csvs = std::fs::read_dir(&run_dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("landscape_gamma")
        })
        .count();
    assert_eq!(csvs, 4);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn unknown_config_key_fails_with_machine_readable_error() {
    let out = scratch("bad-key");
    let output = run(&["verify", "--out", out.to_str().unwrap(), "train.bogus=1"]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("{\"error\":"), "stderr not machine readable: {stderr}");
    assert!(stderr.contains("unknown key 'train.bogus'"));
    assert!(stderr.contains("train.eta"), "error should list valid keys");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn config_file_plus_overrides() {
    let out = scratch("config-file");
    let config_path = out.join("experiment.cfg");
    std::fs::write(
        &config_path,
        "data.n=64\nmodel.layers=2,8,2\ntrain.finetune_steps=2\ntrain.batch_size=4\nexperiment.sample_every=0\n",
    )
    .unwrap();
    let output = run(&[
        "train",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
        "train.finetune_steps=3",
    ]);
    let text = stdout_of(&output);
    assert!(text.contains("trained:"), "{text}");
    // The run dir holds the merged canonical config.
    let run_dir = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.is_dir())
        .unwrap();
    let written = std::fs::read_to_string(run_dir.join("config.txt")).unwrap();
    assert!(written.contains("train.finetune_steps=3"));
    assert!(written.contains("train.seed=9"));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn checkpoints_carry_the_magic_bytes() {
    let out = scratch("magic");
    run(&[
        "train",
        "--out",
        out.to_str().unwrap(),
        "data.n=64",
        "model.layers=2,8,2",
        "train.finetune_steps=1",
        "train.batch_size=4",
        "experiment.sample_every=0",
    ]);
    let run_dir = std::fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let bytes = std::fs::read(run_dir.join("checkpoints/final.uwgt")).unwrap();
    assert_eq!(&bytes[..4], b"UWGT");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    assert_eq!(bytes.len(), 16 + 8 * count);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn plan_then_correlate_roundtrip(
) {
    let out = scratch("plan");
    let plan_out = stdout_of(&run(&[
        "plan",
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
        "data.n=64",
        "model.layers=2,8,2",
        "train.finetune_steps=4",
        "train.batch_size=4",
        "train.sigma_every=2",
        "experiment.sample_every=0",
        "plan.finetune_steps=2,4,6",
        "plan.seed=1,2",
    ]));
    assert!(plan_out.contains("6 cells (6 executed, 0 cached, 0 failed)"), "{plan_out}");

    // Rerunning hits the cache only.
    let rerun_out = stdout_of(&run(&[
        "plan",
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
        "data.n=64",
        "model.layers=2,8,2",
        "train.finetune_steps=4",
        "train.batch_size=4",
        "train.sigma_every=2",
        "experiment.sample_every=0",
        "plan.finetune_steps=2,4,6",
        "plan.seed=1,2",
    ]));
    assert!(rerun_out.contains("(0 executed, 6 cached, 0 failed)"), "{rerun_out}");

    let corr_out = stdout_of(&run(&[
        "correlate",
        "--out",
        out.to_str().unwrap(),
        "correlate.x=finetune_steps",
        "correlate.y=e",
    ]));
    assert!(corr_out.contains("pearson(finetune_steps,e)="), "{corr_out}");
    assert!(out.join("scatter_finetune_steps_e.svg").exists());
    assert!(out.join("scatter_finetune_steps_e.csv").exists());

    // e grows with t within each seed; the pooled spearman must be positive.
    let spearman: f64 = corr_out
        .split("spearman(finetune_steps,e)=")
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(spearman > 0.0, "{spearman}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn missing_results_table_is_a_clean_error() {
    let out = scratch("no-results");
    let output = run(&["correlate", "--out", out.to_str().unwrap()]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("\"command\":\"correlate\""), "{stderr}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn unknown_command_exits_nonzero() {
    let output = run(&["frobnicate"]);
    assert!(!output.status.success());
}

#[test]
fn unlearn_subcommand_writes_unlearned_checkpoint() {
    let out = scratch("unlearn-cmd");
    let text = stdout_of(&run(&[
        "unlearn",
        "--out",
        out.to_str().unwrap(),
        "data.n=64",
        "model.layers=2,8,2",
        "train.finetune_steps=3",
        "train.batch_size=4",
        "experiment.sample_every=0",
        "unlearn.method=amnesiac",
    ]));
    assert!(text.contains("unlearned:"), "{text}");
    let run_dir = std::fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    assert!(run_dir.join("checkpoints/unlearned.uwgt").exists());
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn prs_command_reports_before_and_after() {
    let out = scratch("prs-cmd");
    let text = stdout_of(&run(&[
        "prs",
        "--out",
        out.to_str().unwrap(),
        "data.kind=moons",
        "data.n=80",
        "data.noise=0.3",
        "model.layers=2,16,2",
        "train.finetune_steps=300",
        "train.batch_size=8",
        "train.sigma_every=999",
        "experiment.sample_every=0",
    ]));
    assert!(text.contains("member_prs=") && text.contains("target_after="), "{text}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn determinism_across_processes() {
    // The same invocation in two fresh processes writes identical artifacts.
    let args = |out: &Path| {
        vec![
            "verify".to_string(),
            "--out".to_string(),
            out.to_str().unwrap().to_string(),
            "data.n=64".to_string(),
            "model.layers=2,8,2".to_string(),
            "train.finetune_steps=5".to_string(),
            "train.batch_size=4".to_string(),
            "train.sigma_every=2".to_string(),
            "experiment.sample_every=0".to_string(),
        ]
    };
    let out_a = scratch("proc-a");
    let out_b = scratch("proc-b");
    let run_vec = |args: Vec<String>| {
        let output = Command::new(unlearn_bin()).args(&args).output().unwrap();
        assert!(output.status.success());
    };
    run_vec(args(&out_a));
    run_vec(args(&out_b));
    let collect = |dir: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(current) = stack.pop() {
            for entry in std::fs::read_dir(current).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    files.push((
                        path.strip_prefix(dir).unwrap().to_string_lossy().into_owned(),
                        std::fs::read(&path).unwrap(),
                    ));
                }
            }
        }
        files.sort();
        files
    };
    assert_eq!(collect(&out_a), collect(&out_b));
    let _ = std::fs::remove_dir_all(&out_a);
    let _ = std::fs::remove_dir_all(&out_b);
}
