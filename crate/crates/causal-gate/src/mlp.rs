//! Small feed-forward regressors and classifiers with seeded training.
//!
//! Every network has two ReLU hidden layers as wide as its input, a scalar
//! head (linear for regression, sigmoid for binary classification), and is
//! trained by mini-batch gradient descent with momentum, inverted dropout,
//! and early stopping on a validation split. All randomness, initial
//! weights, batch order, dropout masks, flows from a single stored seed, so
//! retraining a model reproduces it bit for bit. Populations of candidate
//! models differ only in that seed.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cam::{PredictionError, PredictionVector, SelectionModel};
use crate::data::{DataError, Table};
use crate::seeding::derive_seed;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("invalid training configuration: {detail}")]
    InvalidConfig { detail: String },
    #[error("network needs at least one input feature")]
    NoInputs,
    #[error("training and validation tables disagree on feature width ({train} vs {val})")]
    SplitWidthMismatch { train: usize, val: usize },
    #[error("binary task needs 0/1 targets, found {value} at row {row}")]
    NotBinary { value: f64, row: usize },
    #[error("training diverged to a non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("data access failed: {0}")]
    Data(#[from] DataError),
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint is inconsistent: {detail}")]
    BadCheckpoint { detail: String },
    #[error("prediction file line {line}: {detail}")]
    BadPredictionFile { line: usize, detail: String },
}

// ── Model definition ──────────────────────────────────────────────────────

/// What the scalar head predicts, and with which loss the model trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Linear head, mean squared error.
    Regression,
    /// Sigmoid head emitting positive-class probability, cross-entropy.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major `n_out x n_in`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn glorot(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Layer {
        let bound = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_in * n_out)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Layer {
            n_in,
            n_out,
            weights,
            biases: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            let mut z = self.biases[o];
            for (w, v) in row.iter().zip(x) {
                z += w * v;
            }
            out.push(z);
        }
    }
}

/// A feed-forward network `inputs -> relu -> relu -> head` whose hidden
/// width equals the input width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    model_id: usize,
    task: Task,
    n_inputs: usize,
    seed: u64,
    layers: Vec<Layer>,
}

impl MlpModel {
    /// Fresh network with uniform Glorot weights and zero biases, drawn from
    /// the given seed.
    pub fn init(model_id: usize, task: Task, n_inputs: usize, seed: u64) -> Result<MlpModel, MlpError> {
        if n_inputs == 0 {
            return Err(MlpError::NoInputs);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "init", model_id as u64));
        let h = n_inputs;
        let layers = vec![
            Layer::glorot(n_inputs, h, &mut rng),
            Layer::glorot(h, h, &mut rng),
            Layer::glorot(h, 1, &mut rng),
        ];
        Ok(MlpModel {
            model_id,
            task,
            n_inputs,
            seed,
            layers,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    // ── Flat parameter access ─────────────────────────────────────────

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "parameter count mismatch");
        let mut offset = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = layer.biases.len();
            layer.biases.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
    }

    pub fn get_param(&self, index: usize) -> f64 {
        self.params()[index]
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut params = self.params();
        params[index] = value;
        self.set_params(&params);
    }

    // ── Inference ─────────────────────────────────────────────────────

    /// Raw head output for one feature row (before the sigmoid, if any).
    fn head_value(&self, row: &[f64]) -> f64 {
        let mut a = row.to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward(&a, &mut next);
            if i + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut a, &mut next);
        }
        a[0]
    }

    fn output(&self, row: &[f64]) -> f64 {
        let z = self.head_value(row);
        match self.task {
            Task::Regression => z,
            Task::Binary => sigmoid_stable(z),
        }
    }

    /// One prediction per feature row; rows are `width`-wide slices of the
    /// row-major `features` buffer.
    pub fn predict_rows(&self, features: &[f64], width: usize) -> Result<Vec<f64>, MlpError> {
        if width != self.n_inputs {
            return Err(MlpError::BadCheckpoint {
                detail: format!("expected {} input features, got {width}", self.n_inputs),
            });
        }
        Ok(features.chunks_exact(width).map(|row| self.output(row)).collect())
    }

    // ── Loss and gradients ────────────────────────────────────────────

    /// Mean loss over a batch together with its gradient in flat parameter
    /// order. `masks` fixes the dropout pattern; `None` disables dropout
    /// (inference behaviour), which is what validation and finite-difference
    /// checks use.
    pub fn loss_and_gradients(
        &self,
        features: &[f64],
        width: usize,
        targets: &[f64],
        masks: Option<&DropoutMasks>,
    ) -> (f64, Vec<f64>) {
        assert_eq!(width, self.n_inputs, "feature width mismatch");
        let batch = targets.len();
        assert_eq!(features.len(), batch * width, "feature buffer size mismatch");
        let h = self.n_inputs;
        let inv_keep = masks.map_or(1.0, |m| 1.0 / (1.0 - m.rate));

        let mut grads = vec![0.0; self.param_count()];
        let mut total_loss = 0.0;
        let scale = 1.0 / batch as f64;

        let w1_end = h * h;
        let l2_off = w1_end + h;
        let l3_off = l2_off + h * h + h;

        let mut z1 = Vec::new();
        let mut z2 = Vec::new();
        let mut z3 = Vec::new();
        for (r, row) in features.chunks_exact(width).enumerate() {
            self.layers[0].forward(row, &mut z1);
            let mut a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
            if let Some(m) = masks {
                for (v, &keep) in a1.iter_mut().zip(&m.layer1[r * h..(r + 1) * h]) {
                    *v = if keep { *v * inv_keep } else { 0.0 };
                }
            }
            self.layers[1].forward(&a1, &mut z2);
            let mut a2: Vec<f64> = z2.iter().map(|&z| z.max(0.0)).collect();
            if let Some(m) = masks {
                for (v, &keep) in a2.iter_mut().zip(&m.layer2[r * h..(r + 1) * h]) {
                    *v = if keep { *v * inv_keep } else { 0.0 };
                }
            }
            self.layers[2].forward(&a2, &mut z3);
            let z = z3[0];
            let y = targets[r];

            // Head loss and dL/dz in one place per task.
            let (loss, dz) = match self.task {
                Task::Regression => {
                    let err = z - y;
                    (err * err, 2.0 * err)
                }
                Task::Binary => {
                    let loss = z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).ln();
                    (loss, sigmoid_stable(z) - y)
                }
            };
            total_loss += loss * scale;
            let dz3 = dz * scale;

            // Output layer gradients and backpropagated signal.
            let mut da2 = vec![0.0; h];
            let w3 = &self.layers[2].weights;
            for j in 0..h {
                grads[l3_off + j] += dz3 * a2[j];
                da2[j] = dz3 * w3[j];
            }
            grads[l3_off + h] += dz3;

            // Second hidden layer.
            let mut dz2 = vec![0.0; h];
            for j in 0..h {
                let mut g = da2[j];
                if let Some(m) = masks {
                    g = if m.layer2[r * h + j] { g * inv_keep } else { 0.0 };
                }
                dz2[j] = if z2[j] > 0.0 { g } else { 0.0 };
            }
            let w2 = &self.layers[1].weights;
            let mut da1 = vec![0.0; h];
            for o in 0..h {
                let g = dz2[o];
                if g == 0.0 {
                    continue;
                }
                for i in 0..h {
                    grads[l2_off + o * h + i] += g * a1[i];
                    da1[i] += g * w2[o * h + i];
                }
            }
            for o in 0..h {
                grads[l2_off + h * h + o] += dz2[o];
            }

            // First hidden layer.
            let mut dz1 = vec![0.0; h];
            for j in 0..h {
                let mut g = da1[j];
                if let Some(m) = masks {
                    g = if m.layer1[r * h + j] { g * inv_keep } else { 0.0 };
                }
                dz1[j] = if z1[j] > 0.0 { g } else { 0.0 };
            }
            for o in 0..h {
                let g = dz1[o];
                if g == 0.0 {
                    continue;
                }
                for (i, &x) in row.iter().enumerate() {
                    grads[o * width + i] += g * x;
                }
            }
            for o in 0..h {
                grads[w1_end + o] += dz1[o];
            }
        }
        (total_loss, grads)
    }

    /// Mean loss without dropout, used for validation tracking.
    pub fn mean_loss(&self, features: &[f64], width: usize, targets: &[f64]) -> f64 {
        let mut total = 0.0;
        for (row, &y) in features.chunks_exact(width).zip(targets) {
            let z = self.head_value(row);
            total += match self.task {
                Task::Regression => (z - y) * (z - y),
                Task::Binary => z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).ln(),
            };
        }
        total / targets.len() as f64
    }

    // ── Checkpoints ───────────────────────────────────────────────────

    pub fn load(path: &Path) -> Result<MlpModel, MlpError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<MlpModel, MlpError> {
        let model: MlpModel = serde_json::from_str(text)?;
        model.check_shapes()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), MlpError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("model serialization");
        text.push('\n');
        text
    }

    fn check_shapes(&self) -> Result<(), MlpError> {
        let h = self.n_inputs;
        if h == 0 {
            return Err(MlpError::NoInputs);
        }
        let expected = [(h, h), (h, h), (h, 1)];
        if self.layers.len() != expected.len() {
            return Err(MlpError::BadCheckpoint {
                detail: format!("expected 3 layers, got {}", self.layers.len()),
            });
        }
        for (layer, &(n_in, n_out)) in self.layers.iter().zip(&expected) {
            if layer.n_in != n_in
                || layer.n_out != n_out
                || layer.weights.len() != n_in * n_out
                || layer.biases.len() != n_out
            {
                return Err(MlpError::BadCheckpoint {
                    detail: format!(
                        "layer shape {}x{} with {} weights and {} biases does not fit a width-{h} network",
                        layer.n_out,
                        layer.n_in,
                        layer.weights.len(),
                        layer.biases.len()
                    ),
                });
            }
            if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
                return Err(MlpError::BadCheckpoint {
                    detail: "non-finite parameter".to_string(),
                });
            }
        }
        Ok(())
    }
}

impl SelectionModel for MlpModel {
    fn model_id(&self) -> usize {
        self.model_id
    }

    fn predict(&self, table: &Table, target: &str) -> Result<Vec<f64>, PredictionError> {
        let (features, width) = table
            .feature_rows(target)
            .map_err(|e| PredictionError::Other(e.to_string()))?;
        if width != self.n_inputs {
            return Err(PredictionError::WidthMismatch {
                expected: self.n_inputs,
                got: width,
            });
        }
        Ok(features.chunks_exact(width).map(|row| self.output(row)).collect())
    }
}

fn sigmoid_stable(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-row dropout keep masks for both hidden layers, drawn once per batch.
pub struct DropoutMasks {
    pub rate: f64,
    /// `batch * width` keep flags for the first hidden layer.
    pub layer1: Vec<bool>,
    /// Same for the second hidden layer.
    pub layer2: Vec<bool>,
}

impl DropoutMasks {
    pub fn sample(rng: &mut ChaCha8Rng, batch: usize, width: usize, rate: f64) -> DropoutMasks {
        let mut draw = |n: usize| (0..n).map(|_| rng.random::<f64>() >= rate).collect();
        DropoutMasks {
            rate,
            layer1: draw(batch * width),
            layer2: draw(batch * width),
        }
    }
}

// ── Training ──────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    /// Consecutive epochs without strict validation improvement tolerated
    /// before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            momentum: 0.9,
            max_epochs: 20,
            batch_size: 32,
            dropout: 0.2,
            patience: 3,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), MlpError> {
        let bad = |detail: String| Err(MlpError::InvalidConfig { detail });
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} must lie in [0, 1)", self.momentum));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} must lie in [0, 1)", self.dropout));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        Ok(())
    }
}

/// Tracks the best validation loss seen so far and says when to stop:
/// after `patience` consecutive epochs without strict improvement.
#[derive(Debug)]
pub struct EarlyStopper {
    patience: usize,
    strikes: usize,
    best: f64,
    best_epoch: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> EarlyStopper {
        EarlyStopper {
            patience,
            strikes: 0,
            best: f64::INFINITY,
            best_epoch: 0,
        }
    }

    /// Returns `true` when the epoch strictly improved the best loss.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.strikes = 0;
            true
        } else {
            self.strikes += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.strikes >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// Summary of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub val_losses: Vec<f64>,
}

/// Trains a model in place and restores the weights from its best
/// validation epoch. Batch order and dropout masks come from the model's
/// own seed, so the same `(model, data, config)` always yields the same
/// final weights.
pub fn train(
    model: &mut MlpModel,
    train_table: &Table,
    val_table: &Table,
    target: &str,
    config: &TrainConfig,
) -> Result<TrainReport, MlpError> {
    config.validate()?;
    let (train_x, width) = train_table.feature_rows(target)?;
    let train_y = train_table.target_values(target)?;
    let (val_x, val_width) = val_table.feature_rows(target)?;
    let val_y = val_table.target_values(target)?;
    if width != val_width {
        return Err(MlpError::SplitWidthMismatch {
            train: width,
            val: val_width,
        });
    }
    if width != model.n_inputs {
        return Err(MlpError::BadCheckpoint {
            detail: format!("model expects {} inputs, data provides {width}", model.n_inputs),
        });
    }
    if model.task == Task::Binary {
        for (row, &y) in train_y.iter().chain(&val_y).enumerate() {
            if y != 0.0 && y != 1.0 {
                return Err(MlpError::NotBinary { value: y, row });
            }
        }
    }

    let n = train_y.len();
    let h = model.n_inputs;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(model.seed, "sgd", model.model_id as u64));
    let mut velocity = vec![0.0; model.param_count()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut stopper = EarlyStopper::new(config.patience);
    let mut best_params = model.params();
    let mut val_losses = Vec::with_capacity(config.max_epochs);
    let mut batch_x = Vec::new();
    let mut batch_y = Vec::new();

    let mut epochs_run = 0;
    for epoch in 0..config.max_epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &r in chunk {
                batch_x.extend_from_slice(&train_x[r * width..(r + 1) * width]);
                batch_y.push(train_y[r]);
            }
            let masks = if config.dropout > 0.0 {
                Some(DropoutMasks::sample(&mut rng, chunk.len(), h, config.dropout))
            } else {
                None
            };
            let (loss, grads) = model.loss_and_gradients(&batch_x, width, &batch_y, masks.as_ref());
            if !loss.is_finite() {
                return Err(MlpError::Diverged { epoch });
            }
            let mut params = model.params();
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grads) {
                *v = config.momentum * *v - config.learning_rate * g;
                *p += *v;
            }
            model.set_params(&params);
        }
        let val_loss = model.mean_loss(&val_x, width, &val_y);
        if !val_loss.is_finite() {
            return Err(MlpError::Diverged { epoch });
        }
        val_losses.push(val_loss);
        epochs_run = epoch + 1;
        if stopper.observe(epoch, val_loss) {
            best_params = model.params();
        }
        if stopper.should_stop() {
            break;
        }
    }
    model.set_params(&best_params);
    Ok(TrainReport {
        epochs_run,
        best_epoch: stopper.best_epoch(),
        best_val_loss: stopper.best_loss(),
        val_losses,
    })
}

/// Trains `n_models` independently seeded candidates in parallel. Model `i`
/// gets id `i` and seed `base_seed + i`; results keep id order.
pub fn train_population(
    n_models: usize,
    base_seed: u64,
    task: Task,
    train_table: &Table,
    val_table: &Table,
    target: &str,
    config: &TrainConfig,
) -> Result<Vec<MlpModel>, MlpError> {
    let width = train_table.feature_rows(target)?.1;
    if width == 0 {
        return Err(MlpError::NoInputs);
    }
    (0..n_models)
        .into_par_iter()
        .map(|i| {
            let mut model = MlpModel::init(i, task, width, base_seed + i as u64)?;
            train(&mut model, train_table, val_table, target, config)?;
            Ok(model)
        })
        .collect()
}

// ── External predictions ──────────────────────────────────────────────────

/// Reads model predictions produced outside this crate.
///
/// Two layouts are accepted:
/// * plain text, one float per line: a single anonymous model (id 0);
/// * CSV with header `model_id,row_index,prediction`: any number of models,
///   each of which must cover every row exactly once.
///
/// Values are returned per model in ascending id order, rows in order.
pub fn load_external_predictions(path: &Path, n_rows: usize) -> Result<Vec<PredictionVector>, MlpError> {
    let text = std::fs::read_to_string(path)?;
    parse_external_predictions(&text, n_rows)
}

pub fn parse_external_predictions(text: &str, n_rows: usize) -> Result<Vec<PredictionVector>, MlpError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(MlpError::BadPredictionFile {
            line: 1,
            detail: "file is empty".to_string(),
        });
    };

    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    if header == ["model_id", "row_index", "prediction"] {
        use std::collections::BTreeMap;
        let mut per_model: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(MlpError::BadPredictionFile {
                    line: line_no,
                    detail: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let bad = |what: &str| MlpError::BadPredictionFile {
                line: line_no,
                detail: format!("cannot parse {what} from {fields:?}"),
            };
            let model_id: usize = fields[0].parse().map_err(|_| bad("model_id"))?;
            let row: usize = fields[1].parse().map_err(|_| bad("row_index"))?;
            let value: f64 = fields[2].parse().map_err(|_| bad("prediction"))?;
            if row >= n_rows {
                return Err(MlpError::BadPredictionFile {
                    line: line_no,
                    detail: format!("row_index {row} out of range for {n_rows} rows"),
                });
            }
            if !value.is_finite() {
                return Err(MlpError::BadPredictionFile {
                    line: line_no,
                    detail: format!("non-finite prediction {value}"),
                });
            }
            let slots = per_model.entry(model_id).or_insert_with(|| vec![None; n_rows]);
            if slots[row].is_some() {
                return Err(MlpError::BadPredictionFile {
                    line: line_no,
                    detail: format!("duplicate prediction for model {model_id} row {row}"),
                });
            }
            slots[row] = Some(value);
        }
        let mut out = Vec::with_capacity(per_model.len());
        for (model_id, slots) in per_model {
            let mut values = Vec::with_capacity(n_rows);
            for (row, slot) in slots.into_iter().enumerate() {
                match slot {
                    Some(v) => values.push(v),
                    None => {
                        return Err(MlpError::BadPredictionFile {
                            line: 0,
                            detail: format!("model {model_id} is missing row {row}"),
                        })
                    }
                }
            }
            out.push(PredictionVector {
                model_id,
                label: None,
                values,
            });
        }
        return Ok(out);
    }

    // Plain layout: every non-empty line is one float.
    let mut values = Vec::with_capacity(n_rows);
    for (idx, line) in std::iter::once((0, first)).chain(lines) {
        let line_no = idx + 1;
        let value: f64 = line.trim().parse().map_err(|_| MlpError::BadPredictionFile {
            line: line_no,
            detail: format!("cannot parse float from {line:?}"),
        })?;
        if !value.is_finite() {
            return Err(MlpError::BadPredictionFile {
                line: line_no,
                detail: format!("non-finite prediction {value}"),
            });
        }
        values.push(value);
    }
    if values.len() != n_rows {
        return Err(MlpError::BadPredictionFile {
            line: 0,
            detail: format!("expected {n_rows} predictions, got {}", values.len()),
        });
    }
    Ok(vec![PredictionVector {
        model_id: 0,
        label: None,
        values,
    }])
}

// ── Tests ─────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnSpec, Schema};

    fn toy_table(n: usize, seed: u64, f: impl Fn(f64, f64) -> f64) -> Table {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = a.iter().zip(&b).map(|(&a, &b)| f(a, b)).collect();
        let schema = Schema::new(vec![
            ColumnSpec::continuous("a"),
            ColumnSpec::continuous("b"),
            ColumnSpec::continuous("y"),
        ])
        .unwrap();
        Table::new(
            schema,
            vec![Column::Continuous(a), Column::Continuous(b), Column::Continuous(y)],
        )
        .unwrap()
    }

    #[test]
    fn init_is_glorot_bounded_with_zero_biases() {
        let model = MlpModel::init(0, Task::Regression, 5, 7).unwrap();
        let bound = (6.0 / 10.0f64).sqrt();
        let params = model.params();
        assert_eq!(params.len(), 5 * 5 + 5 + 5 * 5 + 5 + 5 + 1);
        for layer in &model.layers {
            let b = (6.0 / (layer.n_in + layer.n_out) as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() < b.max(bound) + 1e-12));
            assert!(layer.biases.iter().all(|&v| v == 0.0));
        }
        let again = MlpModel::init(0, Task::Regression, 5, 7).unwrap();
        assert_eq!(model, again);
        let other = MlpModel::init(0, Task::Regression, 5, 8).unwrap();
        assert_ne!(model, other);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut model = MlpModel::init(1, Task::Binary, 3, 0).unwrap();
        let before = model.params();
        model.set_param(5, 0.25);
        assert_eq!(model.get_param(5), 0.25);
        let mut restored = before.clone();
        restored[5] = 0.25;
        assert_eq!(model.params(), restored);
    }

    /// Central finite differences against the analytic gradient, with and
    /// without fixed dropout masks. Batches are resampled until every
    /// pre-activation clears the ReLU kink by a wide margin, so the loss is
    /// smooth across the probe step.
    #[test]
    fn gradients_match_finite_differences() {
        for task in [Task::Regression, Task::Binary] {
            let (model, features, targets, masks) = smooth_case(task, 3, 6);
            let width = model.n_inputs();
            for masks in [None, Some(&masks)] {
                let (_, grads) = model.loss_and_gradients(&features, width, &targets, masks);
                let step = 1e-5;
                for index in 0..model.param_count() {
                    let mut plus = model.clone();
                    plus.set_param(index, model.get_param(index) + step);
                    let mut minus = model.clone();
                    minus.set_param(index, model.get_param(index) - step);
                    let (lp, _) = plus.loss_and_gradients(&features, width, &targets, masks);
                    let (lm, _) = minus.loss_and_gradients(&features, width, &targets, masks);
                    let numeric = (lp - lm) / (2.0 * step);
                    let denom = numeric.abs().max(grads[index].abs()).max(1e-8);
                    let rel = (numeric - grads[index]).abs() / denom;
                    assert!(
                        rel < 1e-4 || (numeric.abs() < 1e-10 && grads[index].abs() < 1e-10),
                        "{task:?} param {index}: analytic {} vs numeric {numeric}",
                        grads[index]
                    );
                }
            }
        }
    }

    /// Finds a (model, batch, mask) whose hidden pre-activations all sit at
    /// least `margin` away from zero, keeping finite differences valid.
    pub(super) fn smooth_case(
        task: Task,
        width: usize,
        batch: usize,
    ) -> (MlpModel, Vec<f64>, Vec<f64>, DropoutMasks) {
        let margin = 1e-3;
        for attempt in 0..1000u64 {
            let model = MlpModel::init(0, task, width, 1000 + attempt).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(attempt, "fd-batch", 0));
            let features: Vec<f64> =
                (0..batch * width).map(|_| rng.random_range(-2.0..2.0)).collect();
            let targets: Vec<f64> = (0..batch)
                .map(|_| match task {
                    Task::Regression => rng.random_range(-1.0..1.0),
                    Task::Binary => f64::from(rng.random::<bool>()),
                })
                .collect();
            let masks = DropoutMasks::sample(&mut rng, batch, width, 0.2);

            let mut ok = true;
            let mut z1 = Vec::new();
            let mut z2 = Vec::new();
            for (r, row) in features.chunks_exact(width).enumerate() {
                model.layers[0].forward(row, &mut z1);
                ok &= z1.iter().all(|z| z.abs() > margin);
                let inv_keep = 1.0 / 0.8;
                let a1: Vec<f64> = z1
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| {
                        let a = z.max(0.0);
                        if masks.layer1[r * width + j] {
                            a * inv_keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                model.layers[1].forward(&a1, &mut z2);
                ok &= z2.iter().all(|z| z.abs() > margin);
                // The unmasked forward pass must clear the margin too.
                let a1_plain: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
                model.layers[1].forward(&a1_plain, &mut z2);
                ok &= z2.iter().all(|z| z.abs() > margin);
                if !ok {
                    break;
                }
            }
            if ok {
                return (model, features, targets, masks);
            }
        }
        panic!("no smooth finite-difference case found in 1000 attempts");
    }

    #[test]
    fn inverted_dropout_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200000;
        let masks = DropoutMasks::sample(&mut rng, n, 1, 0.2);
        let mean = masks
            .layer1
            .iter()
            .map(|&keep| if keep { 1.0 / 0.8 } else { 0.0 })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean scaled mask {mean}");
    }

    #[test]
    fn early_stopper_waits_for_patience() {
        let mut stopper = EarlyStopper::new(1);
        assert!(stopper.observe(0, 1.0));
        assert!(!stopper.should_stop());
        assert!(!stopper.observe(1, 1.1));
        assert!(stopper.should_stop());
        assert_eq!(stopper.best_epoch(), 0);
        assert_eq!(stopper.best_loss(), 1.0);

        let mut stopper = EarlyStopper::new(3);
        stopper.observe(0, 1.0);
        stopper.observe(1, 1.2);
        stopper.observe(2, 0.9);
        stopper.observe(3, 0.95);
        stopper.observe(4, 0.91);
        assert!(!stopper.should_stop());
        stopper.observe(5, 0.93);
        assert!(stopper.should_stop());
        assert_eq!(stopper.best_epoch(), 2);
    }

    #[test]
    fn training_reduces_loss_on_a_constant_target() {
        let train_table = toy_table(300, 1, |_, _| 3.0);
        let val_table = toy_table(60, 2, |_, _| 3.0);
        let mut model = MlpModel::init(0, Task::Regression, 2, 5).unwrap();
        let initial = {
            let (x, w) = val_table.feature_rows("y").unwrap();
            let y = val_table.target_values("y").unwrap();
            model.mean_loss(&x, w, &y)
        };
        let config = TrainConfig {
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &train_table, &val_table, "y", &config).unwrap();
        assert!(report.best_val_loss < initial / 10.0, "{} -> {}", initial, report.best_val_loss);
        assert_eq!(report.val_losses.len(), report.epochs_run);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let train_table = toy_table(200, 1, |a, b| a + b);
        let val_table = toy_table(50, 2, |a, b| a + b);
        let config = TrainConfig::default();
        let mut m1 = MlpModel::init(0, Task::Regression, 2, 9).unwrap();
        let mut m2 = MlpModel::init(0, Task::Regression, 2, 9).unwrap();
        train(&mut m1, &train_table, &val_table, "y", &config).unwrap();
        train(&mut m2, &train_table, &val_table, "y", &config).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn restores_best_epoch_weights() {
        let train_table = toy_table(200, 1, |a, b| a - b);
        let val_table = toy_table(50, 2, |a, b| a - b);
        let mut model = MlpModel::init(0, Task::Regression, 2, 3).unwrap();
        let report = train(&mut model, &train_table, &val_table, "y", &TrainConfig::default()).unwrap();
        let (x, w) = val_table.feature_rows("y").unwrap();
        let y = val_table.target_values("y").unwrap();
        let final_loss = model.mean_loss(&x, w, &y);
        assert!((final_loss - report.best_val_loss).abs() < 1e-12);
        assert!((final_loss - report.val_losses[report.best_epoch]).abs() < 1e-12);
    }

    #[test]
    fn population_ids_and_seeds_are_sequential() {
        let train_table = toy_table(120, 4, |a, b| a + 2.0 * b);
        let val_table = toy_table(40, 5, |a, b| a + 2.0 * b);
        let config = TrainConfig {
            max_epochs: 2,
            ..TrainConfig::default()
        };
        let models =
            train_population(4, 100, Task::Regression, &train_table, &val_table, "y", &config)
                .unwrap();
        assert_eq!(models.len(), 4);
        for (i, model) in models.iter().enumerate() {
            assert_eq!(model.model_id(), i);
            assert_eq!(model.seed(), 100 + i as u64);
        }
        let again =
            train_population(4, 100, Task::Regression, &train_table, &val_table, "y", &config)
                .unwrap();
        assert_eq!(models, again);
    }

    #[test]
    fn binary_training_rejects_non_binary_targets() {
        let train_table = toy_table(50, 1, |a, _| a);
        let val_table = toy_table(20, 2, |a, _| a);
        let mut model = MlpModel::init(0, Task::Binary, 2, 0).unwrap();
        let err = train(&mut model, &train_table, &val_table, "y", &TrainConfig::default());
        assert!(matches!(err, Err(MlpError::NotBinary { .. })));
    }

    #[test]
    fn binary_predictions_are_probabilities() {
        let train_table = toy_table(200, 1, |a, _| f64::from(a > 0.0));
        let val_table = toy_table(50, 2, |a, _| f64::from(a > 0.0));
        let mut model = MlpModel::init(0, Task::Binary, 2, 1).unwrap();
        train(&mut model, &train_table, &val_table, "y", &TrainConfig::default()).unwrap();
        let preds = model.predict(&val_table, "y").unwrap();
        assert!(preds.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let model = MlpModel::init(0, Task::Regression, 4, 0).unwrap();
        let table = toy_table(10, 1, |a, b| a + b);
        let err = model.predict(&table, "y").unwrap_err();
        assert!(matches!(err, PredictionError::WidthMismatch { expected: 4, got: 2 }));
    }

    #[test]
    fn checkpoint_round_trip_is_byte_stable() {
        let train_table = toy_table(100, 1, |a, b| a * b);
        let val_table = toy_table(30, 2, |a, b| a * b);
        let mut model = MlpModel::init(2, Task::Regression, 2, 11).unwrap();
        let config = TrainConfig {
            max_epochs: 3,
            ..TrainConfig::default()
        };
        train(&mut model, &train_table, &val_table, "y", &config).unwrap();
        let text = model.to_json();
        let back = MlpModel::from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json(), text);
        let preds_a = model.predict(&val_table, "y").unwrap();
        let preds_b = back.predict(&val_table, "y").unwrap();
        assert_eq!(preds_a, preds_b);
    }

    #[test]
    fn checkpoint_rejects_inconsistent_shapes() {
        let model = MlpModel::init(0, Task::Regression, 3, 0).unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
        value["layers"][1]["weights"] = serde_json::json!([1.0, 2.0]);
        let err = MlpModel::from_json(&value.to_string()).unwrap_err();
        assert!(matches!(err, MlpError::Json(_) | MlpError::BadCheckpoint { .. }));
    }

    #[test]
    fn external_predictions_plain_lines() {
        let text = "1.5\n-2.0\n0.25\n";
        let preds = parse_external_predictions(text, 3).unwrap();
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].model_id, 0);
        assert_eq!(preds[0].values, vec![1.5, -2.0, 0.25]);
        let err = parse_external_predictions(text, 4).unwrap_err();
        assert!(matches!(err, MlpError::BadPredictionFile { .. }));
    }

    #[test]
    fn external_predictions_csv_layout() {
        let text = "model_id,row_index,prediction\n\
                    1,0,0.1\n1,1,0.2\n0,1,4.0\n0,0,3.0\n";
        let preds = parse_external_predictions(text, 2).unwrap();
        assert_eq!(preds.len(), 2);
        assert_eq!(preds[0].model_id, 0);
        assert_eq!(preds[0].values, vec![3.0, 4.0]);
        assert_eq!(preds[1].model_id, 1);
        assert_eq!(preds[1].values, vec![0.1, 0.2]);

        let missing = "model_id,row_index,prediction\n0,0,1.0\n";
        let err = parse_external_predictions(missing, 2).unwrap_err();
        assert!(matches!(err, MlpError::BadPredictionFile { .. }));

        let dup = "model_id,row_index,prediction\n0,0,1.0\n0,0,2.0\n";
        let err = parse_external_predictions(dup, 1).unwrap_err();
        assert!(matches!(err, MlpError::BadPredictionFile { .. }));
    }
}
