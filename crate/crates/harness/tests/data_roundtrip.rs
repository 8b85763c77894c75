//! Dataset ingestion round trips and format errors.

use std::io::Write;
use std::path::PathBuf;

use proptest::prelude::*;
use unlearn_harness::config::Config;
use unlearn_harness::data::{gen_blobs, load_csv, load_idx, save_csv};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("unlearn-data-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn csv_round_trip_preserves_values() {
    let dir = scratch("csv");
    let data = gen_blobs(40, 2, 1.3, 11).unwrap();
    let path = dir.join("blobs.csv");
    save_csv(&data, &path).unwrap();
    let loaded = load_csv(&path, "label").unwrap();
    assert_eq!(loaded.inputs, data.inputs);
    assert_eq!(loaded.labels, data.labels);
    assert_eq!(loaded.n_features, data.n_features);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn csv_with_three_rows_and_two_features() {
    let dir = scratch("csv3");
    let path = dir.join("tiny.csv");
    std::fs::write(&path, "x0,x1,label\n0.5,1.5,0\n-1,2,1\n3,4,0\n").unwrap();
    let data = load_csv(&path, "label").unwrap();
    assert_eq!(data.len(), 3);
    assert_eq!(data.n_features, 2);
    assert_eq!(data.row(1), &[-1.0, 2.0]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn csv_missing_label_column_is_descriptive() {
    let dir = scratch("csv-miss");
    let path = dir.join("tiny.csv");
    std::fs::write(&path, "x0,x1,y\n0.5,1.5,0\n").unwrap();
    let err = load_csv(&path, "label").unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("no column 'label'"), "{msg}");
    let _ = std::fs::remove_dir_all(&dir);
}

fn write_idx_pair(dir: &std::path::Path, magic_images: u32, magic_labels: u32) -> (PathBuf, PathBuf) {
    let images = dir.join("images.idx");
    let labels = dir.join("labels.idx");
    let mut f = std::fs::File::create(&images).unwrap();
    f.write_all(&magic_images.to_be_bytes()).unwrap();
    f.write_all(&3u32.to_be_bytes()).unwrap(); // count
    f.write_all(&2u32.to_be_bytes()).unwrap(); // rows
    f.write_all(&2u32.to_be_bytes()).unwrap(); // cols
    f.write_all(&[0, 64, 128, 255, 10, 20, 30, 40, 250, 200, 150, 100]).unwrap();
    let mut f = std::fs::File::create(&labels).unwrap();
    f.write_all(&magic_labels.to_be_bytes()).unwrap();
    f.write_all(&3u32.to_be_bytes()).unwrap();
    f.write_all(&[1, 0, 1]).unwrap();
    (images, labels)
}

#[test]
fn idx_pair_loads_and_scales_pixels() {
    let dir = scratch("idx");
    let (images, labels) = write_idx_pair(&dir, 0x0000_0803, 0x0000_0801);
    let data = load_idx(&images, &labels, None).unwrap();
    assert_eq!(data.len(), 3);
    assert_eq!(data.n_features, 4);
    assert_eq!(data.labels, vec![1, 0, 1]);
    assert_eq!(data.row(0)[3], 1.0);
    assert_eq!(data.row(0)[0], 0.0);
    assert!(data.inputs.iter().all(|p| (0.0..=1.0).contains(p)));
    // max_n truncation keeps a prefix.
    let truncated = load_idx(&images, &labels, Some(2)).unwrap();
    assert_eq!(truncated.len(), 2);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn idx_magic_mismatch_reports_offset() {
    let dir = scratch("idx-bad");
    let (images, labels) = write_idx_pair(&dir, 0xdead_beef, 0x0000_0801);
    let err = load_idx(&images, &labels, None).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("bad image magic") && msg.contains("byte 0"), "{msg}");
    let _ = std::fs::remove_dir_all(&dir);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn config_parse_serialize_identity(eta in 1e-6f64..1.0, steps in 1usize..10_000, seed in 0u64..u64::MAX / 2) {
        let text = format!("train.eta={eta}\ntrain.finetune_steps={steps}\ntrain.seed={seed}\n");
        let cfg = Config::parse(&text).unwrap();
        let round = Config::parse(&cfg.serialize()).unwrap();
        prop_assert_eq!(&cfg, &round);
        prop_assert_eq!(cfg.run_id(), round.run_id());
    }

    #[test]
    fn blobs_generation_total_and_split(n in 10usize..200, classes in 2usize..5, seed in 0u64..1000) {
        let data = gen_blobs(n, classes, 0.7, seed).unwrap();
        prop_assert_eq!(data.len(), n);
        prop_assert_eq!(data.train_idx.len() + data.test_idx.len(), n);
        let mut counts = vec![0usize; classes];
        for &l in &data.labels { counts[l] += 1; }
        let spreadiest = counts.iter().max().unwrap() - counts.iter().min().unwrap();
        prop_assert!(spreadiest <= 1);
    }
}
