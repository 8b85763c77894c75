//! Minimal deterministic feed-forward network engine.
//!
//! Models are dense MLPs over `f64` with per-hidden-layer activations and raw
//! logit outputs; softmax happens inside the losses. Parameters live in one
//! flat [`ParamVector`] laid out layer by layer, weights (row-major,
//! `out × in`) followed by biases. Forward, loss, and gradient are pure
//! functions: identical inputs give bit-identical outputs.

mod loss;

pub use loss::{accuracy, grad, loss, loss_and_grad, sgd_step, softmax, LossKind, LossSpec};

use crate::error::{Error, Result};
use crate::rng;
use crate::vector::ParamVector;

/// Activation applied after a hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative at `z`. ReLU takes the subgradient 0 at the kink.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Argument(format!("unknown activation '{other}'"))),
        }
    }
}

/// Architecture description: layer widths plus one activation per hidden
/// layer. The output layer emits raw logits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
}

impl ModelSpec {
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Argument(
                "a model needs at least an input and an output layer".into(),
            ));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Argument("layer sizes must be positive".into()));
        }
        let classes = *layer_sizes.last().expect("nonempty");
        if classes < 2 {
            return Err(Error::Argument(format!(
                "output dimension must be at least 2, got {classes}"
            )));
        }
        let hidden = layer_sizes.len() - 2;
        if activations.len() != hidden {
            return Err(Error::Shape(format!(
                "{} activations for {} hidden layers",
                activations.len(),
                hidden
            )));
        }
        Ok(Self { layer_sizes, activations })
    }

    /// Same activation on every hidden layer.
    pub fn mlp(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        let hidden = layer_sizes.len().saturating_sub(2);
        Self::new(layer_sizes.to_vec(), vec![activation; hidden])
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("nonempty")
    }

    /// Number of weight layers (input→output transitions).
    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    /// Activation after weight layer `l`, `None` for the output layer.
    fn activation_after(&self, l: usize) -> Option<Activation> {
        if l + 1 < self.num_layers() {
            Some(self.activations[l])
        } else {
            None
        }
    }
}

/// A model is an architecture plus a concrete parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    params: ParamVector,
}

impl Model {
    pub fn new(spec: ModelSpec, params: ParamVector) -> Result<Self> {
        if params.len() != spec.param_count() {
            return Err(Error::Shape(format!(
                "{} parameters for an architecture needing {}",
                params.len(),
                spec.param_count()
            )));
        }
        Ok(Self { spec, params })
    }

    /// Seeded initialization: every parameter uniform in `[-s, s]` with
    /// `s = sqrt(6 / (fan_in + fan_out))` of its layer.
    ///
    /// Biases share the weight distribution; zero biases would leave a layer
    /// behind a fully inactive ReLU layer sitting exactly on its kink, where
    /// gradients are ill-defined.
    pub fn init(spec: ModelSpec, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut params = Vec::with_capacity(spec.param_count());
        for w in spec.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..(fan_in + 1) * fan_out {
                params.push(rng::uniform_symmetric(&mut rng, s));
            }
        }
        let params = ParamVector::new(params).expect("bounded init is finite");
        Self { spec, params }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn with_params(&self, params: ParamVector) -> Result<Self> {
        Self::new(self.spec.clone(), params)
    }
}

/// A mini-batch: row-major inputs plus one class index per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    inputs: Vec<f64>,
    rows: usize,
    cols: usize,
    labels: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Vec<f64>, cols: usize, labels: Vec<usize>) -> Result<Self> {
        if cols == 0 || labels.is_empty() {
            return Err(Error::Argument("batch must have at least one example".into()));
        }
        if inputs.len() != cols * labels.len() {
            return Err(Error::Shape(format!(
                "{} inputs for {} rows of width {}",
                inputs.len(),
                labels.len(),
                cols
            )));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("batch inputs".into()));
        }
        let rows = labels.len();
        Ok(Self { inputs, rows, cols, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged batch rows".into()));
        }
        Batch::new(rows.concat(), cols, labels)
    }

    /// A one-example batch holding row `i` of this batch.
    pub fn single(&self, i: usize) -> Result<Batch> {
        if i >= self.rows {
            return Err(Error::Argument(format!("row {i} out of range")));
        }
        Batch::new(self.row(i).to_vec(), self.cols, vec![self.labels[i]])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.cols..(i + 1) * self.cols]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Raw logits for a batch, one row per example.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    values: Vec<f64>,
    rows: usize,
    classes: usize,
}

impl Logits {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.classes..(i + 1) * self.classes]
    }
}

/// Deterministic forward pass; errors if the batch width does not match the
/// model input dimension.
pub fn forward(model: &Model, batch: &Batch) -> Result<Logits> {
    check_batch(model, batch)?;
    let classes = model.spec.output_dim();
    let mut values = Vec::with_capacity(batch.rows() * classes);
    for i in 0..batch.rows() {
        let trace = forward_trace(&model.spec, model.params.as_slice(), batch.row(i));
        values.extend_from_slice(trace.logits());
    }
    Ok(Logits { values, rows: batch.rows(), classes })
}

pub(crate) fn check_batch(model: &Model, batch: &Batch) -> Result<()> {
    if batch.cols() != model.spec.input_dim() {
        return Err(Error::Shape(format!(
            "batch width {} does not match model input {}",
            batch.cols(),
            model.spec.input_dim()
        )));
    }
    Ok(())
}

/// Per-example forward pass keeping pre-activations for backprop.
pub(crate) struct Trace {
    /// `pre[l]` holds z of layer l+1 (before activation), `post[l]` after.
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Trace {
    pub(crate) fn logits(&self) -> &[f64] {
        self.post.last().expect("at least one layer")
    }
}

pub(crate) fn forward_trace(spec: &ModelSpec, params: &[f64], input: &[f64]) -> Trace {
    let mut pre = Vec::with_capacity(spec.num_layers());
    let mut post = Vec::with_capacity(spec.num_layers());
    let mut current = input.to_vec();
    let mut offset = 0;
    for l in 0..spec.num_layers() {
        let (n_in, n_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
        let weights = &params[offset..offset + n_in * n_out];
        let biases = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += (n_in + 1) * n_out;

        let mut z = vec![0.0; n_out];
        for o in 0..n_out {
            let row = &weights[o * n_in..(o + 1) * n_in];
            let mut acc = biases[o];
            for (w, x) in row.iter().zip(current.iter()) {
                acc += w * x;
            }
            z[o] = acc;
        }
        let a = match spec.activation_after(l) {
            Some(act) => z.iter().map(|&v| act.apply(v)).collect(),
            None => z.clone(),
        };
        pre.push(z);
        post.push(a.clone());
        current = a;
    }
    Trace { pre, post }
}

/// Backpropagates `d_logits` for one example, accumulating into `grad_out`.
pub(crate) fn backprop_example(
    spec: &ModelSpec,
    params: &[f64],
    input: &[f64],
    trace: &Trace,
    d_logits: &[f64],
    grad_out: &mut [f64],
) {
    let layers = spec.num_layers();
    // Offsets of each layer's parameter block.
    let mut offsets = Vec::with_capacity(layers);
    let mut offset = 0;
    for l in 0..layers {
        offsets.push(offset);
        offset += (spec.layer_sizes[l] + 1) * spec.layer_sizes[l + 1];
    }

    let mut delta = d_logits.to_vec();
    for l in (0..layers).rev() {
        let (n_in, n_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
        let base = offsets[l];
        let a_prev: &[f64] = if l == 0 { input } else { &trace.post[l - 1] };

        for o in 0..n_out {
            let d = delta[o];
            let w_row = base + o * n_in;
            for i in 0..n_in {
                grad_out[w_row + i] += d * a_prev[i];
            }
            grad_out[base + n_in * n_out + o] += d;
        }

        if l > 0 {
            let weights = &params[base..base + n_in * n_out];
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                let row = &weights[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    next[i] += row[i] * d;
                }
            }
            let act = spec.activations[l - 1];
            for (i, n) in next.iter_mut().enumerate() {
                *n *= act.derivative(trace.pre[l - 1][i]);
            }
            delta = next;
        }
    }
}
