//! In-memory classification datasets with a fixed train/test split.

use crate::error::{Error, Result};
use crate::nn::Batch;

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Blobs,
    Moons,
    Csv,
    Idx,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Blobs => "blobs",
            Provenance::Moons => "moons",
            Provenance::Csv => "csv",
            Provenance::Idx => "idx",
        }
    }
}

/// A dense feature matrix plus integer labels and a train/test split.
///
/// Rows are examples; `inputs` is row-major with `n_features` columns. The
/// split indices are disjoint and together cover every row.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub provenance: Provenance,
    pub inputs: Vec<f64>,
    pub n_features: usize,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl Dataset {
    /// Validates shapes, label range, and the split partition.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        provenance: Provenance,
        inputs: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        n_classes: usize,
        train_idx: Vec<usize>,
        test_idx: Vec<usize>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Argument("n_features must be positive".into()));
        }
        if inputs.len() != labels.len() * n_features {
            return Err(Error::Shape(format!(
                "{} input values for {} labels with {} features",
                inputs.len(),
                labels.len(),
                n_features
            )));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset inputs".into()));
        }
        for &label in &labels {
            if label >= n_classes {
                return Err(Error::Label { label, classes: n_classes });
            }
        }
        let n = labels.len();
        let mut seen = vec![false; n];
        for &i in train_idx.iter().chain(test_idx.iter()) {
            if i >= n || seen[i] {
                return Err(Error::Argument(format!(
                    "split index {i} out of range or repeated"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Argument("split does not cover the dataset".into()));
        }
        Ok(Self {
            name: name.into(),
            provenance,
            inputs,
            n_features,
            labels,
            n_classes,
            train_idx,
            test_idx,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Assembles a batch from dataset row indices.
    pub fn batch(&self, indices: &[usize]) -> Result<Batch> {
        let mut inputs = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Argument(format!("row index {i} out of range")));
            }
            inputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Batch::new(inputs, self.n_features, labels)
    }

    /// The full held-out split as one batch.
    pub fn test_batch(&self) -> Result<Batch> {
        self.batch(&self.test_idx)
    }
}
