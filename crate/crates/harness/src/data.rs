//! Dataset generation and file ingestion.
//!
//! Generated datasets (blobs, moons) are seeded and reproduce exactly; their
//! 80/20 split comes from a seeded shuffle. Loaded datasets (CSV, IDX) use a
//! fixed deterministic split — every fifth row is held out — so a file loads
//! identically everywhere without extra state.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use unlearn_core::data::{Dataset, Provenance};
use unlearn_core::rng;

use crate::error::{Error, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn split_seeded(n: usize, stream: &mut rng::SeededRng) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    rng::shuffle(stream, &mut order);
    let n_test = (n / 5).max(1);
    let test = order[..n_test].to_vec();
    let train = order[n_test..].to_vec();
    (train, test)
}

/// Every fifth row held out; position-based and stateless.
fn split_fixed(n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::with_capacity(n - n / 5);
    let mut test = Vec::with_capacity(n / 5 + 1);
    for i in 0..n {
        if i % 5 == 4 {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    if test.is_empty() {
        test.push(train.pop().expect("n >= 2"));
    }
    (train, test)
}

/// Gaussian blobs around class centers on a circle of radius 3.
///
/// Class counts are balanced within one; `spread = 0` degenerates to the
/// centers themselves, which a linear model separates perfectly.
pub fn gen_blobs(n: usize, classes: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::Data(format!("blobs needs n >= 10, got {n}")));
    }
    if classes < 2 {
        return Err(Error::Data("blobs needs at least 2 classes".into()));
    }
    if spread.is_nan() || spread < 0.0 || !spread.is_finite() {
        return Err(Error::Data(format!("spread must be finite and >= 0, got {spread}")));
    }
    let mut stream = rng::seeded(seed);
    let mut inputs = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        let angle = std::f64::consts::TAU * class as f64 / classes as f64;
        inputs.push(3.0 * angle.cos() + spread * rng::standard_normal(&mut stream));
        inputs.push(3.0 * angle.sin() + spread * rng::standard_normal(&mut stream));
        labels.push(class);
    }
    let (train, test) = split_seeded(n, &mut stream);
    Ok(Dataset::new(
        format!("blobs-n{n}-c{classes}-seed{seed}"),
        Provenance::Blobs,
        inputs,
        2,
        labels,
        classes,
        train,
        test,
    )?)
}

/// Two interleaved half-moons with Gaussian coordinate noise.
pub fn gen_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::Data(format!("moons needs n >= 10, got {n}")));
    }
    if noise.is_nan() || noise < 0.0 || !noise.is_finite() {
        return Err(Error::Data(format!("noise must be finite and >= 0, got {noise}")));
    }
    let mut stream = rng::seeded(seed);
    let mut inputs = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    let per_class = [n.div_ceil(2), n / 2];
    for i in 0..n {
        let class = i % 2;
        let k = i / 2;
        let steps = per_class[class].max(2) - 1;
        let t = std::f64::consts::PI * k as f64 / steps as f64;
        let (mut x, mut y) = if class == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        x += noise * rng::standard_normal(&mut stream);
        y += noise * rng::standard_normal(&mut stream);
        inputs.extend_from_slice(&[x, y]);
        labels.push(class);
    }
    let (train, test) = split_seeded(n, &mut stream);
    Ok(Dataset::new(
        format!("moons-n{n}-seed{seed}"),
        Provenance::Moons,
        inputs,
        2,
        labels,
        2,
        train,
        test,
    )?)
}

/// Loads a dataset from a headered CSV with numeric feature columns and one
/// integer label column named `label_column`.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_idx = columns.iter().position(|c| *c == label_column).ok_or_else(|| {
        Error::Data(format!(
            "{}: no column '{label_column}' among {columns:?}",
            path.display()
        ))
    })?;

    let n_features = columns.len() - 1;
    if n_features == 0 {
        return Err(Error::Data(format!("{}: no feature columns", path.display())));
    }
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::Data(format!(
                "{}:{}: expected {} fields, got {}",
                path.display(),
                lineno + 1,
                columns.len(),
                fields.len()
            )));
        }
        for (i, field) in fields.iter().enumerate() {
            if i == label_idx {
                labels.push(field.parse::<usize>().map_err(|e| {
                    Error::Data(format!("{}:{}: label '{field}': {e}", path.display(), lineno + 1))
                })?);
            } else {
                inputs.push(field.parse::<f64>().map_err(|e| {
                    Error::Data(format!("{}:{}: value '{field}': {e}", path.display(), lineno + 1))
                })?);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let (train, test) = split_fixed(labels.len());
    Ok(Dataset::new(
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        Provenance::Csv,
        inputs,
        n_features,
        labels,
        classes.max(2),
        train,
        test,
    )?)
}

/// Writes a dataset as CSV with feature columns `x0..` and a `label` column.
pub fn save_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for j in 0..data.n_features {
        out.push_str(&format!("x{j},"));
    }
    out.push_str("label\n");
    for i in 0..data.len() {
        for v in data.row(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", data.labels[i]));
    }
    let mut file = File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn read_be_u32(reader: &mut impl Read, offset: &mut usize) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|e| Error::Data(format!("truncated IDX file at byte {offset}: {e}")))?;
    *offset += 4;
    Ok(u32::from_be_bytes(buf))
}

/// Loads an IDX image/label pair (the MNIST container format), scaling
/// pixels to `[0, 1]`. `max_n` truncates the row count when given.
pub fn load_idx(images_path: &Path, labels_path: &Path, max_n: Option<usize>) -> Result<Dataset> {
    let mut images = BufReader::new(
        File::open(images_path).map_err(|e| Error::Data(format!("{}: {e}", images_path.display())))?,
    );
    let mut offset = 0usize;
    let magic = read_be_u32(&mut images, &mut offset)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "{}: bad image magic {magic:#010x} at byte 0, expected {IDX_IMAGES_MAGIC:#010x}",
            images_path.display()
        )));
    }
    let count = read_be_u32(&mut images, &mut offset)? as usize;
    let rows = read_be_u32(&mut images, &mut offset)? as usize;
    let cols = read_be_u32(&mut images, &mut offset)? as usize;
    let take = max_n.map(|m| m.min(count)).unwrap_or(count);
    let n_features = rows * cols;
    let mut pixel_buf = vec![0u8; take * n_features];
    images
        .read_exact(&mut pixel_buf)
        .map_err(|e| Error::Data(format!("{}: truncated pixels at byte {offset}: {e}", images_path.display())))?;
    let inputs: Vec<f64> = pixel_buf.iter().map(|&p| p as f64 / 255.0).collect();

    let mut labels_file = BufReader::new(
        File::open(labels_path).map_err(|e| Error::Data(format!("{}: {e}", labels_path.display())))?,
    );
    let mut label_offset = 0usize;
    let magic = read_be_u32(&mut labels_file, &mut label_offset)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Data(format!(
            "{}: bad label magic {magic:#010x} at byte 0, expected {IDX_LABELS_MAGIC:#010x}",
            labels_path.display()
        )));
    }
    let label_count = read_be_u32(&mut labels_file, &mut label_offset)? as usize;
    if label_count != count {
        return Err(Error::Data(format!(
            "image count {count} does not match label count {label_count}"
        )));
    }
    let mut label_buf = vec![0u8; take];
    labels_file
        .read_exact(&mut label_buf)
        .map_err(|e| Error::Data(format!("{}: truncated labels at byte {label_offset}: {e}", labels_path.display())))?;
    let labels: Vec<usize> = label_buf.iter().map(|&l| l as usize).collect();

    if labels.is_empty() {
        return Err(Error::Data("IDX pair contains no rows".into()));
    }
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let (train, test) = split_fixed(labels.len());
    Ok(Dataset::new(
        images_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        Provenance::Idx,
        inputs,
        n_features,
        labels,
        classes.max(2),
        train,
        test,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use unlearn_core::nn::{accuracy, sgd_step, Activation, LossSpec, Model, ModelSpec};

    #[test]
    fn blobs_are_seed_deterministic() {
        let a = gen_blobs(60, 3, 0.8, 5).unwrap();
        let b = gen_blobs(60, 3, 0.8, 5).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.train_idx, b.train_idx);
        let c = gen_blobs(60, 3, 0.8, 6).unwrap();
        assert_ne!(a.inputs, c.inputs);
    }

    #[test]
    fn blobs_class_counts_balanced() {
        let data = gen_blobs(64, 3, 1.0, 2).unwrap();
        let mut counts = [0usize; 3];
        for &l in &data.labels {
            counts[l] += 1;
        }
        let max = *counts.iter().max().unwrap();
        let min = *counts.iter().min().unwrap();
        assert!(max - min <= 1, "{counts:?}");
    }

    #[test]
    fn zero_spread_blobs_linearly_separable() {
        let data = gen_blobs(40, 2, 0.0, 3).unwrap();
        let spec = ModelSpec::mlp(&[2, 2], Activation::Identity).unwrap();
        let mut model = Model::init(spec, 1);
        let train_batch = data.batch(&data.train_idx).unwrap();
        for _ in 0..200 {
            model = sgd_step(&model, &train_batch, &LossSpec::ce(), 0.5).unwrap();
        }
        assert_eq!(accuracy(&model, &train_batch).unwrap(), 1.0);
    }

    #[test]
    fn splits_partition_the_rows() {
        for data in [gen_blobs(50, 2, 1.0, 9).unwrap(), gen_moons(51, 0.2, 9).unwrap()] {
            let mut all: Vec<usize> =
                data.train_idx.iter().chain(data.test_idx.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn tiny_n_rejected() {
        assert!(gen_blobs(5, 2, 1.0, 1).is_err());
        assert!(gen_moons(9, 0.1, 1).is_err());
    }
}
