//! Small feedforward network for two-tone state classification.
//!
//! Architecture: 4 inputs `{I1, Q1, I2, Q2}` -> 16 -> 8 -> 3, SELU on both
//! hidden layers and a softmax output read as the probabilities of `|0>`,
//! `|1>` and `|2>`. Inputs are standardised with statistics of the training
//! split. Training is plain mini-batch gradient descent on the mean
//! cross-entropy; the model with the best validation accuracy is kept.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::labels::CombinedLabel;
use crate::error::{ReadoutError, Result};

pub const INPUT_DIM: usize = 4;
pub const NUM_CLASSES: usize = 3;
pub const ARCHITECTURE: [usize; 4] = [INPUT_DIM, 16, 8, NUM_CLASSES];

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;

pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

/// Per-feature affine map applied before the first layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    fn identity(dim: usize) -> Self {
        Standardization {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    fn fit(rows: &[[f64; INPUT_DIM]]) -> Self {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; INPUT_DIM];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; INPUT_DIM];
        for row in rows {
            for k in 0..INPUT_DIM {
                std[k] += (row[k] - mean[k]).powi(2) / n;
            }
        }
        let std = std
            .into_iter()
            .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Standardization { mean, std }
    }

    fn apply(&self, x: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        let mut out = [0.0; INPUT_DIM];
        for k in 0..INPUT_DIM {
            out[k] = (x[k] - self.mean[k]) / self.std[k];
        }
        out
    }
}

const FORMAT_TAG: &str = "transmon-readout-fnn/1";

fn format_tag() -> String {
    FORMAT_TAG.to_string()
}

/// Trained (or freshly initialised) network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    #[serde(default = "format_tag")]
    pub format: String,
    pub activation: String,
    pub output: String,
    pub layers: Vec<DenseLayer>,
    pub standardization: Standardization,
}

/// Layer-by-layer gradients, same shapes as the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl FnnModel {
    fn with_layers(layers: Vec<DenseLayer>) -> Self {
        FnnModel {
            format: format_tag(),
            activation: "selu".into(),
            output: "softmax".into(),
            layers,
            standardization: Standardization::identity(INPUT_DIM),
        }
    }

    /// All weights and biases zero; outputs are uniform.
    pub fn zeros() -> Self {
        FnnModel::with_layers(
            ARCHITECTURE
                .windows(2)
                .map(|w| DenseLayer::zeros(w[0], w[1]))
                .collect(),
        )
    }

    /// Zero biases and Gaussian weights of variance `1 / fan_in`.
    pub fn initialise(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = FnnModel::zeros();
        for layer in &mut model.layers {
            let normal =
                Normal::new(0.0, (1.0 / layer.inputs as f64).sqrt()).expect("positive fan-in");
            for w in &mut layer.weights {
                *w = normal.sample(&mut rng);
            }
        }
        model
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_TAG {
            return Err(ReadoutError::Serde(format!(
                "unsupported model format '{}'",
                self.format
            )));
        }
        if self.activation != "selu" || self.output != "softmax" {
            return Err(ReadoutError::Serde(format!(
                "unsupported activation/output '{}'/'{}'",
                self.activation, self.output
            )));
        }
        let widths: Vec<usize> = std::iter::once(self.layers.first().map_or(0, |l| l.inputs))
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect();
        if widths != ARCHITECTURE {
            return Err(ReadoutError::Serde(format!(
                "layer widths {widths:?} differ from {ARCHITECTURE:?}"
            )));
        }
        for pair in self.layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(ReadoutError::Serde("inconsistent layer shapes".into()));
            }
        }
        for l in &self.layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(ReadoutError::Serde(
                    "weight buffer has the wrong length".into(),
                ));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(ReadoutError::Serde(
                    "model contains non-finite weights".into(),
                ));
            }
        }
        let s = &self.standardization;
        if s.mean.len() != INPUT_DIM
            || s.std.len() != INPUT_DIM
            || s.std.iter().any(|v| !(*v > 0.0))
            || s.mean.iter().any(|v| !v.is_finite())
        {
            return Err(ReadoutError::Serde(
                "invalid standardization constants".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ReadoutError::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: FnnModel =
            serde_json::from_str(text).map_err(|e| ReadoutError::Serde(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    /// Class probabilities for a raw (unstandardised) input.
    pub fn probabilities(&self, input: &[f64; INPUT_DIM]) -> [f64; NUM_CLASSES] {
        self.probabilities_standardized(&self.standardization.apply(input))
    }

    fn probabilities_standardized(&self, x: &[f64; INPUT_DIM]) -> [f64; NUM_CLASSES] {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&a);
            a = if i == last {
                z
            } else {
                z.into_iter().map(selu).collect()
            };
        }
        let p = softmax(&a);
        [p[0], p[1], p[2]]
    }

    /// Mean cross-entropy of `(standardised input, class)` pairs and its
    /// gradient with respect to every weight and bias.
    pub fn loss_and_gradients(&self, batch: &[([f64; INPUT_DIM], usize)]) -> (f64, Gradients) {
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let scale = 1.0 / batch.len() as f64;
        let last = self.layers.len() - 1;
        let mut loss = 0.0;

        for (x, class) in batch {
            // Forward pass, keeping layer inputs and pre-activations.
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut a = x.to_vec();
            for (i, layer) in self.layers.iter().enumerate() {
                let z = layer.apply(&a);
                inputs.push(a);
                a = if i == last {
                    z.clone()
                } else {
                    z.iter().map(|&v| selu(v)).collect()
                };
                pre.push(z);
            }
            let p = softmax(&a);
            loss -= p[*class].max(f64::MIN_POSITIVE).ln() * scale;

            // Backward pass; delta is dLoss/dz of the current layer.
            let mut delta: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(k, &pk)| (pk - if k == *class { 1.0 } else { 0.0 }) * scale)
                .collect();
            for i in (0..self.layers.len()).rev() {
                let layer = &self.layers[i];
                let g = &mut grads.layers[i];
                for o in 0..layer.outputs {
                    g.biases[o] += delta[o];
                    for j in 0..layer.inputs {
                        g.weights[o * layer.inputs + j] += delta[o] * inputs[i][j];
                    }
                }
                if i > 0 {
                    delta = (0..layer.inputs)
                        .map(|j| {
                            let back: f64 = (0..layer.outputs)
                                .map(|o| layer.weights[o * layer.inputs + j] * delta[o])
                                .sum();
                            back * selu_derivative(pre[i - 1][j])
                        })
                        .collect();
                }
            }
        }
        (loss, grads)
    }

    fn descend(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, dw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * dw;
            }
            for (b, db) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= learning_rate * db;
            }
        }
    }
}

/// Labelled feature vectors `{I1, Q1, I2, Q2}` with classes in `0..3`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<[f64; INPUT_DIM]>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: [f64; INPUT_DIM], label: usize) {
        self.inputs.push(input);
        self.labels.push(label);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.0005,
            batch_size: 64,
            train_size: 8000,
            validation_size: 2000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0
            || self.batch_size == 0
            || self.train_size == 0
            || self.validation_size == 0
        {
            return Err(ReadoutError::Config(
                "epochs, batch size and split sizes must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(ReadoutError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    /// Epoch of the returned model; 0 means the initial weights.
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub final_training_loss: f64,
    pub validation_accuracy: Vec<f64>,
}

fn accuracy(model: &FnnModel, rows: &[([f64; INPUT_DIM], usize)]) -> f64 {
    let correct = rows
        .iter()
        .filter(|(x, c)| argmax(&model.probabilities_standardized(x)) == *c)
        .count();
    correct as f64 / rows.len() as f64
}

fn argmax(p: &[f64; NUM_CLASSES]) -> usize {
    let mut best = 0;
    for k in 1..NUM_CLASSES {
        if p[k] > p[best] {
            best = k;
        }
    }
    best
}

/// Trains on the first `train_size` rows and validates on the next
/// `validation_size` rows of `dataset`.
pub fn fnn_train(dataset: &Dataset, config: &TrainConfig) -> Result<(FnnModel, TrainSummary)> {
    config.validate()?;
    if dataset.inputs.len() != dataset.labels.len() {
        return Err(ReadoutError::InvalidArgument(
            "inputs and labels differ in length".into(),
        ));
    }
    let needed = config.train_size + config.validation_size;
    if dataset.len() < needed {
        return Err(ReadoutError::InvalidArgument(format!(
            "dataset has {} rows, training needs {needed}",
            dataset.len()
        )));
    }
    if let Some(bad) = dataset.labels.iter().find(|&&c| c >= NUM_CLASSES) {
        return Err(ReadoutError::InvalidArgument(format!(
            "class label {bad} is not in 0..3"
        )));
    }
    if dataset.inputs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ReadoutError::InvalidArgument(
            "dataset contains non-finite features".into(),
        ));
    }
    let train_labels = &dataset.labels[..config.train_size];
    if train_labels.iter().all(|&c| c == train_labels[0]) {
        return Err(ReadoutError::InvalidArgument(
            "training split contains a single class".into(),
        ));
    }

    let standardization = Standardization::fit(&dataset.inputs[..config.train_size]);
    let rows: Vec<([f64; INPUT_DIM], usize)> = dataset.inputs[..needed]
        .iter()
        .zip(&dataset.labels)
        .map(|(x, &c)| (standardization.apply(x), c))
        .collect();
    let (train, validation) = rows.split_at(config.train_size);

    let mut model = FnnModel::initialise(config.seed);
    model.standardization = standardization;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed_5eed_5eed);

    let mut best = model.clone();
    let mut best_accuracy = accuracy(&model, validation);
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(config.epochs);
    let mut epoch_loss = f64::NAN;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i]));
            let (loss, grads) = model.loss_and_gradients(&batch);
            loss_sum += loss * chunk.len() as f64;
            model.descend(&grads, config.learning_rate);
        }
        epoch_loss = loss_sum / train.len() as f64;
        let acc = accuracy(&model, validation);
        history.push(acc);
        if acc > best_accuracy {
            best_accuracy = acc;
            best_epoch = epoch;
            best = model.clone();
        }
    }

    Ok((
        best,
        TrainSummary {
            best_epoch,
            best_validation_accuracy: best_accuracy,
            final_training_loss: epoch_loss,
            validation_accuracy: history,
        },
    ))
}

/// Most probable state and the probability vector. Ties go to the lower
/// state index; the network never reports an overlap error.
pub fn fnn_classify(
    model: &FnnModel,
    input: &[f64; INPUT_DIM],
) -> (CombinedLabel, [f64; NUM_CLASSES]) {
    let p = model.probabilities(input);
    let label = CombinedLabel::from_state_index(argmax(&p)).expect("three output classes");
    (label, p)
}
