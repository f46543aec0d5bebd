//! A fully connected classifier with exact backpropagation.
//!
//! ReLU hidden layers, softmax output, mean cross-entropy loss, trained with
//! mini-batch SGD (optionally with momentum). Everything is 64-bit and
//! deterministic given the configured seeds.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::dataio::{shuffle, Dataset};
use crate::stable_dist::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Units per hidden layer.
    pub width: usize,
    /// Number of hidden layers.
    pub depth: usize,
    pub n_inputs: usize,
    pub n_classes: usize,
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 1 || self.depth < 1 {
            return Err(Error::Parameter("width and depth must be >= 1".into()));
        }
        if self.n_inputs < 1 {
            return Err(Error::Parameter("n_inputs must be >= 1".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Parameter("n_classes must be >= 2".into()));
        }
        Ok(())
    }
}

/// Hidden-layer structure presets for the fully connected model, as
/// (width, depth) pairs.
pub const FCN_PRESETS: [(usize, usize); 5] = [(3, 3), (3, 4), (3, 5), (10, 3), (100, 3)];

/// One dense layer: `rows x cols` weight matrix (row-major, one row per
/// output unit) and a bias per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseModel {
    pub config: ModelConfig,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    SgdMomentum { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 64,
            learning_rate: 0.01,
            optimizer: Optimizer::SgdMomentum { mu: 0.9 },
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Parameter("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Parameter("learning_rate must be > 0".into()));
        }
        if let Optimizer::SgdMomentum { mu } = self.optimizer {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::Parameter(format!("momentum must be in [0, 1), got {mu}")));
            }
        }
        Ok(())
    }

    fn momentum(&self) -> f64 {
        match self.optimizer {
            Optimizer::Sgd => 0.0,
            Optimizer::SgdMomentum { mu } => mu,
        }
    }
}

/// Layer dimension chain `n_inputs -> width x depth -> n_classes`.
fn layer_dims(config: &ModelConfig) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(config.depth + 1);
    let mut prev = config.n_inputs;
    for _ in 0..config.depth {
        dims.push((config.width, prev));
        prev = config.width;
    }
    dims.push((config.n_classes, prev));
    dims
}

/// Initialize weights from a zero-mean uniform with half-width
/// `sqrt(6 / (fan_in + fan_out))`; biases zero. Deterministic per init_seed.
pub fn init(config: &ModelConfig) -> Result<DenseModel> {
    config.validate()?;
    let mut rng = RngStream::new(config.init_seed).derive("model-init", 0).rng();
    let layers = layer_dims(config)
        .into_iter()
        .map(|(rows, cols)| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let weights = (0..rows * cols)
                .map(|_| {
                    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    (2.0 * u - 1.0) * limit
                })
                .collect();
            Layer {
                rows,
                cols,
                weights,
                bias: vec![0.0; rows],
            }
        })
        .collect();
    Ok(DenseModel {
        config: *config,
        layers,
    })
}

impl DenseModel {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Fraction of parameters (weights and biases) with |p| < threshold.
    pub fn sparsity(&self, threshold: f64) -> Result<f64> {
        if !(threshold > 0.0) {
            return Err(Error::Parameter("sparsity threshold must be > 0".into()));
        }
        let below: usize = self
            .layers
            .iter()
            .map(|l| {
                l.weights.iter().chain(&l.bias).filter(|p| p.abs() < threshold).count()
            })
            .sum();
        Ok(below as f64 / self.param_count() as f64)
    }
}

/// Default sparsity threshold for parameter-count reporting.
pub const SPARSITY_THRESHOLD: f64 = 0.01;

fn affine(layer: &Layer, input: &[f64], out: &mut [f64]) {
    for r in 0..layer.rows {
        let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
        let mut z = layer.bias[r];
        for (w, x) in row.iter().zip(input) {
            z += w * x;
        }
        out[r] = z;
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Forward pass: class-probability matrix, one row per batch sample. Each row
/// sums to 1 (softmax with max subtraction).
pub fn forward(model: &DenseModel, batch: &[f64]) -> Result<Vec<f64>> {
    let d = model.config.n_inputs;
    if batch.len() % d != 0 {
        return Err(Error::Parameter(format!(
            "batch length {} is not a multiple of n_inputs {d}",
            batch.len()
        )));
    }
    if batch.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite input to forward pass".into()));
    }
    let n = batch.len() / d;
    let k = model.config.n_classes;
    let mut probs = vec![0.0; n * k];
    for i in 0..n {
        let mut cur = batch[i * d..(i + 1) * d].to_vec();
        for (li, layer) in model.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.rows];
            affine(layer, &cur, &mut next);
            if li + 1 < model.layers.len() {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            cur = next;
        }
        let row = &mut probs[i * k..(i + 1) * k];
        row.copy_from_slice(&cur);
        softmax_in_place(row);
    }
    Ok(probs)
}

/// Gradients congruent to a model's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    fn zeros_like(model: &DenseModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Layer {
                    rows: l.rows,
                    cols: l.cols,
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Mean cross-entropy loss and exact gradients over a batch.
///
/// Probabilities are floored at 1e-15 inside the log only; the softmax
/// Jacobian path uses the exact probabilities.
pub fn loss_and_grads(model: &DenseModel, batch: &[f64], labels: &[usize]) -> Result<(f64, Gradients)> {
    let d = model.config.n_inputs;
    let k = model.config.n_classes;
    if batch.len() != labels.len() * d {
        return Err(Error::Parameter(format!(
            "batch length {} does not match {} labels x {d} inputs",
            batch.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Parameter("empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Parameter(format!("label {bad} outside [0, {k})")));
    }
    if batch.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite input to loss_and_grads".into()));
    }

    let n = labels.len();
    let n_layers = model.layers.len();
    let mut grads = Gradients::zeros_like(model);
    let mut loss = 0.0;

    // per-sample activations: acts[0] is the input row, acts[li+1] the
    // post-ReLU (or softmax) output of layer li
    let mut acts: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.rows]).collect();
    let mut deltas: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.rows]).collect();

    for i in 0..n {
        let input = &batch[i * d..(i + 1) * d];
        // forward with caches
        for li in 0..n_layers {
            let (prev_acts, rest) = acts.split_at_mut(li);
            let src: &[f64] = if li == 0 { input } else { &prev_acts[li - 1] };
            affine(&model.layers[li], src, &mut rest[0]);
            if li + 1 < n_layers {
                for v in rest[0].iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        softmax_in_place(&mut acts[n_layers - 1]);
        let p_true = acts[n_layers - 1][labels[i]];
        loss -= p_true.max(1e-15).ln();

        // output delta: (p - onehot) / n
        for c in 0..k {
            deltas[n_layers - 1][c] =
                (acts[n_layers - 1][c] - if c == labels[i] { 1.0 } else { 0.0 }) / n as f64;
        }
        // backward
        for li in (0..n_layers).rev() {
            let src: &[f64] = if li == 0 { input } else { &acts[li - 1] };
            let layer = &model.layers[li];
            let g = &mut grads.layers[li];
            for r in 0..layer.rows {
                let delta = deltas[li][r];
                g.bias[r] += delta;
                let grow = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                for (gw, x) in grow.iter_mut().zip(src) {
                    *gw += delta * x;
                }
            }
            if li > 0 {
                // propagate through the weights, then the ReLU mask
                let (lower, upper) = deltas.split_at_mut(li);
                let prev_delta = &mut lower[li - 1];
                for pd in prev_delta.iter_mut() {
                    *pd = 0.0;
                }
                for r in 0..layer.rows {
                    let delta = upper[0][r];
                    let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                    for (pd, w) in prev_delta.iter_mut().zip(row) {
                        *pd += delta * w;
                    }
                }
                for (pd, a) in prev_delta.iter_mut().zip(&acts[li - 1]) {
                    if *a <= 0.0 {
                        *pd = 0.0;
                    }
                }
            }
        }
    }
    Ok((loss / n as f64, grads))
}

/// Mini-batch training with per-epoch reshuffling. Returns the trained model
/// and the per-epoch mean batch loss. `epochs = 0` returns the input model
/// unchanged; a non-finite loss aborts with a training error naming the
/// epoch and batch.
pub fn train(
    model: DenseModel,
    dataset: &Dataset,
    tc: &TrainConfig,
) -> Result<(DenseModel, Vec<f64>)> {
    tc.validate()?;
    if dataset.n_features() != model.config.n_inputs {
        return Err(Error::Parameter(format!(
            "dataset has {} features but model expects {}",
            dataset.n_features(),
            model.config.n_inputs
        )));
    }
    let mut model = model;
    let mut velocity = Gradients::zeros_like(&model);
    let mut trace = Vec::with_capacity(tc.epochs);
    let mu = tc.momentum();
    let n = dataset.n_samples();
    let d = dataset.n_features();
    let shuffle_stream = RngStream::new(tc.shuffle_seed);

    for epoch in 0..tc.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle(&mut order, &mut shuffle_stream.derive("epoch", epoch as u64).rng());

        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        let mut batch_feats = Vec::with_capacity(tc.batch_size * d);
        let mut batch_labels = Vec::with_capacity(tc.batch_size);
        for (batch_idx, chunk) in order.chunks(tc.batch_size).enumerate() {
            batch_feats.clear();
            batch_labels.clear();
            for &i in chunk {
                batch_feats.extend_from_slice(dataset.row(i));
                batch_labels.push(dataset.labels()[i]);
            }
            let (loss, grads) = loss_and_grads(&model, &batch_feats, &batch_labels)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: batch_idx,
                    message: format!("loss became {loss}"),
                });
            }
            epoch_loss += loss;
            n_batches += 1;
            for (layer, (v, g)) in model
                .layers
                .iter_mut()
                .zip(velocity.layers.iter_mut().zip(&grads.layers))
            {
                for ((w, vw), gw) in layer.weights.iter_mut().zip(&mut v.weights).zip(&g.weights) {
                    *vw = mu * *vw + gw;
                    *w -= tc.learning_rate * *vw;
                }
                for ((b, vb), gb) in layer.bias.iter_mut().zip(&mut v.bias).zip(&g.bias) {
                    *vb = mu * *vb + gb;
                    *b -= tc.learning_rate * *vb;
                }
            }
            if model
                .layers
                .iter()
                .any(|l| l.weights.iter().chain(&l.bias).any(|p| !p.is_finite()))
            {
                return Err(Error::Training {
                    epoch,
                    batch: batch_idx,
                    message: "parameters became non-finite".into(),
                });
            }
        }
        trace.push(epoch_loss / n_batches.max(1) as f64);
    }
    Ok((model, trace))
}

/// Fraction of argmax-correct predictions; ties break to the lowest class
/// index.
pub fn accuracy(model: &DenseModel, dataset: &Dataset) -> Result<f64> {
    if dataset.n_samples() == 0 {
        return Err(Error::Parameter("accuracy of an empty dataset is undefined".into()));
    }
    if dataset.n_features() != model.config.n_inputs {
        return Err(Error::Parameter(format!(
            "dataset has {} features but model expects {}",
            dataset.n_features(),
            model.config.n_inputs
        )));
    }
    let probs = forward(model, dataset.features())?;
    let k = model.config.n_classes;
    let correct = dataset
        .labels()
        .iter()
        .enumerate()
        .filter(|&(i, &label)| {
            let row = &probs[i * k..(i + 1) * k];
            let mut best = 0usize;
            for (c, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = c;
                }
            }
            best == label
        })
        .count();
    Ok(correct as f64 / dataset.n_samples() as f64)
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

/// Serialize a model to JSON with 17-significant-digit decimals. The output
/// is canonical: load followed by save is byte-identical.
pub fn model_to_json(model: &DenseModel) -> String {
    let mut out = String::new();
    let c = &model.config;
    let _ = write!(
        out,
        "{{\n  \"config\": {{\"width\": {}, \"depth\": {}, \"n_inputs\": {}, \"n_classes\": {}, \"activation\": \"relu\", \"init_seed\": {}}},\n  \"layers\": [",
        c.width, c.depth, c.n_inputs, c.n_classes, c.init_seed
    );
    for (i, layer) in model.layers.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "\n    {{\"rows\": {}, \"cols\": {}, \"weights\": [",
            layer.rows, layer.cols
        );
        for (j, w) in layer.weights.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{w:.16e}");
        }
        out.push_str("], \"bias\": [");
        for (j, b) in layer.bias.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{b:.16e}");
        }
        out.push_str("]}");
    }
    out.push_str("\n  ]\n}\n");
    out
}

#[derive(Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Deserialize)]
struct ModelFile {
    config: ConfigFile,
    layers: Vec<LayerFile>,
}

#[derive(Deserialize)]
struct ConfigFile {
    width: usize,
    depth: usize,
    n_inputs: usize,
    n_classes: usize,
    init_seed: u64,
}

pub fn model_from_json(text: &str) -> Result<DenseModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    let config = ModelConfig {
        width: file.config.width,
        depth: file.config.depth,
        n_inputs: file.config.n_inputs,
        n_classes: file.config.n_classes,
        init_seed: file.config.init_seed,
    };
    config.validate()?;
    let expected = layer_dims(&config);
    if file.layers.len() != expected.len() {
        return Err(Error::Format(format!(
            "model file has {} layers, config implies {}",
            file.layers.len(),
            expected.len()
        )));
    }
    let layers = file
        .layers
        .into_iter()
        .zip(expected)
        .map(|(l, (rows, cols))| {
            if l.rows != rows || l.cols != cols {
                return Err(Error::Format(format!(
                    "layer is {}x{}, config implies {rows}x{cols}",
                    l.rows, l.cols
                )));
            }
            if l.weights.len() != rows * cols || l.bias.len() != rows {
                return Err(Error::Format("layer array lengths do not match its dimensions".into()));
            }
            if l.weights.iter().chain(&l.bias).any(|p| !p.is_finite()) {
                return Err(Error::Format("non-finite parameter in model file".into()));
            }
            Ok(Layer {
                rows: l.rows,
                cols: l.cols,
                weights: l.weights,
                bias: l.bias,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DenseModel { config, layers })
}

pub fn save_model(model: &DenseModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<DenseModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}
