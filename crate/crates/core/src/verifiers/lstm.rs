//! Two-layer LSTM sequence classifier trained from scratch.
//!
//! Layer 1 returns its full hidden sequence, layer 2 only its final state,
//! and a single logistic unit produces the genuine-user probability. Dropout
//! is applied to both layer outputs during training. Forward and backward
//! passes are batched and time-major: row `t * batch + b` of every cache
//! matrix belongs to timestep `t` of sequence `b`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VerifierError;
use crate::features::NormalizerState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub units_per_layer: usize,
    pub layers: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub lr_reduce_factor: f64,
    pub lr_reduce_patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub class_weighting: bool,
    /// Fraction of each class held out (from the end, in input order) to
    /// monitor validation loss.
    pub validation_fraction: f64,
    /// Global gradient-norm cap per step; 0 disables.
    #[serde(default)]
    pub clip_norm: f64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            units_per_layer: 64,
            layers: 2,
            dropout: 0.3,
            learning_rate: 5e-4,
            max_epochs: 200,
            early_stop_patience: 10,
            lr_reduce_factor: 0.2,
            lr_reduce_patience: 5,
            batch_size: 32,
            seed: 42,
            class_weighting: true,
            validation_fraction: 0.2,
            clip_norm: 1.0,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<(), VerifierError> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(VerifierError::InvalidConfig(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(VerifierError::InvalidConfig("learning rate must be > 0".into()));
        }
        if self.layers != 2 {
            return Err(VerifierError::InvalidConfig("only the two-layer architecture is supported".into()));
        }
        if self.units_per_layer == 0 || self.batch_size == 0 {
            return Err(VerifierError::InvalidConfig("units and batch size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(VerifierError::InvalidConfig("validation fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One LSTM layer. Gate blocks along the last axis are ordered
/// input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub w_in: Array2<f64>,
    pub w_rec: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LstmLayer {
    fn new(input: usize, units: usize, rng: &mut ChaCha8Rng) -> Self {
        let lim_in = (6.0 / (input + 4 * units) as f64).sqrt();
        let lim_rec = (6.0 / (units + 4 * units) as f64).sqrt();
        let w_in = Array2::from_shape_fn((input, 4 * units), |_| rng.random_range(-lim_in..lim_in));
        let w_rec = Array2::from_shape_fn((units, 4 * units), |_| rng.random_range(-lim_rec..lim_rec));
        let mut bias = Array1::zeros(4 * units);
        bias.slice_mut(s![units..2 * units]).fill(1.0);
        LstmLayer { w_in, w_rec, bias }
    }

    fn zeros_like(&self) -> Self {
        LstmLayer {
            w_in: Array2::zeros(self.w_in.raw_dim()),
            w_rec: Array2::zeros(self.w_rec.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    pub fn units(&self) -> usize {
        self.w_rec.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.nrows()
    }
}

/// Network parameters: two LSTM layers plus the logistic head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub layer1: LstmLayer,
    pub layer2: LstmLayer,
    pub head_w: Array1<f64>,
    pub head_b: f64,
}

impl LstmParams {
    /// Glorot-uniform kernels, forget-gate bias 1, zero head (so an untrained
    /// network outputs exactly 0.5).
    pub fn init(input: usize, units: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer1 = LstmLayer::new(input, units, &mut rng);
        let layer2 = LstmLayer::new(units, units, &mut rng);
        LstmParams { layer1, layer2, head_w: Array1::zeros(units), head_b: 0.0 }
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams {
            layer1: self.layer1.zeros_like(),
            layer2: self.layer2.zeros_like(),
            head_w: Array1::zeros(self.head_w.raw_dim()),
            head_b: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer1.input_dim()
    }

    /// Flat mutable views of every parameter tensor in a fixed order.
    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let LstmParams { layer1, layer2, head_w, head_b } = self;
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(8);
        for layer in [layer1, layer2] {
            let LstmLayer { w_in, w_rec, bias } = layer;
            out.push(w_in.as_slice_mut().expect("standard layout"));
            out.push(w_rec.as_slice_mut().expect("standard layout"));
            out.push(bias.as_slice_mut().expect("standard layout"));
        }
        out.push(head_w.as_slice_mut().expect("standard layout"));
        out.push(std::slice::from_mut(head_b));
        out
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(8);
        for layer in [&self.layer1, &self.layer2] {
            out.push(layer.w_in.as_slice().expect("standard layout"));
            out.push(layer.w_rec.as_slice().expect("standard layout"));
            out.push(layer.bias.as_slice().expect("standard layout"));
        }
        out.push(self.head_w.as_slice().expect("standard layout"));
        out.push(std::slice::from_ref(&self.head_b));
        out
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cached activations of one layer over a batch.
struct LayerCache {
    /// Activated gates, (T*B, 4H).
    gates: Array2<f64>,
    /// Cell states, (T*B, H).
    cell: Array2<f64>,
    /// tanh of cell states, (T*B, H).
    cell_tanh: Array2<f64>,
    /// Hidden states, (T*B, H).
    hidden: Array2<f64>,
}

fn layer_forward(layer: &LstmLayer, x: ArrayView2<f64>, steps: usize, batch: usize) -> LayerCache {
    let h = layer.units();
    let rows = steps * batch;
    let mut gates = x.dot(&layer.w_in);
    gates += &layer.bias;
    let mut cell = Array2::<f64>::zeros((rows, h));
    let mut cell_tanh = Array2::<f64>::zeros((rows, h));
    let mut hidden = Array2::<f64>::zeros((rows, h));

    for t in 0..steps {
        let r0 = t * batch;
        let r1 = r0 + batch;
        if t > 0 {
            let prev_h = hidden.slice(s![r0 - batch..r0, ..]).to_owned();
            let mut z = gates.slice_mut(s![r0..r1, ..]);
            general_mat_mul(1.0, &prev_h, &layer.w_rec, 1.0, &mut z);
        }
        for b in 0..batch {
            let row = r0 + b;
            let mut g = gates.row_mut(row);
            let g = g.as_slice_mut().expect("contiguous row");
            for k in 0..h {
                g[k] = sigmoid(g[k]);
                g[h + k] = sigmoid(g[h + k]);
                g[2 * h + k] = g[2 * h + k].tanh();
                g[3 * h + k] = sigmoid(g[3 * h + k]);
            }
            for k in 0..h {
                let c_prev = if t > 0 { cell[[row - batch, k]] } else { 0.0 };
                let c = g[h + k] * c_prev + g[k] * g[2 * h + k];
                let ct = c.tanh();
                cell[[row, k]] = c;
                cell_tanh[[row, k]] = ct;
                hidden[[row, k]] = g[3 * h + k] * ct;
            }
        }
    }
    LayerCache { gates, cell, cell_tanh, hidden }
}

/// Backpropagation through time for one layer. `d_hidden` holds the loss
/// gradient arriving at each hidden state from above, (T*B, H). Returns the
/// gradient w.r.t. the layer input when `need_input_grad` is set.
fn layer_backward(
    layer: &LstmLayer,
    cache: &LayerCache,
    x: ArrayView2<f64>,
    d_hidden: &Array2<f64>,
    steps: usize,
    batch: usize,
    grad: &mut LstmLayer,
    need_input_grad: bool,
) -> Option<Array2<f64>> {
    let h = layer.units();
    let rows = steps * batch;
    let mut dz = Array2::<f64>::zeros((rows, 4 * h));
    let mut dh_rec = Array2::<f64>::zeros((batch, h));
    let mut dc_next = Array2::<f64>::zeros((batch, h));
    let w_rec_t = layer.w_rec.t();

    for t in (0..steps).rev() {
        let r0 = t * batch;
        for b in 0..batch {
            let row = r0 + b;
            let g = cache.gates.row(row);
            for k in 0..h {
                let (i, f, c_hat, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let ct = cache.cell_tanh[[row, k]];
                let dh = d_hidden[[row, k]] + dh_rec[[b, k]];
                let dc = dc_next[[b, k]] + dh * o * (1.0 - ct * ct);
                let c_prev = if t > 0 { cache.cell[[row - batch, k]] } else { 0.0 };
                dz[[row, k]] = dc * c_hat * i * (1.0 - i);
                dz[[row, h + k]] = dc * c_prev * f * (1.0 - f);
                dz[[row, 2 * h + k]] = dc * i * (1.0 - c_hat * c_hat);
                dz[[row, 3 * h + k]] = dh * ct * o * (1.0 - o);
                dc_next[[b, k]] = dc * f;
            }
        }
        if t > 0 {
            let dz_t = dz.slice(s![r0..r0 + batch, ..]);
            general_mat_mul(1.0, &dz_t, &w_rec_t, 0.0, &mut dh_rec);
        }
    }

    // Parameter gradients over all timesteps at once.
    general_mat_mul(1.0, &x.t(), &dz, 1.0, &mut grad.w_in);
    if steps > 1 {
        let prev_h = cache.hidden.slice(s![..rows - batch, ..]);
        let dz_later = dz.slice(s![batch.., ..]);
        general_mat_mul(1.0, &prev_h.t(), &dz_later, 1.0, &mut grad.w_rec);
    }
    grad.bias += &dz.sum_axis(Axis(0));

    need_input_grad.then(|| dz.dot(&layer.w_in.t()))
}

/// A batch of equal-length sequences in time-major layout.
struct Batch {
    x: Array2<f64>,
    steps: usize,
    size: usize,
}

fn make_batch(seqs: &[&Array2<f64>]) -> Batch {
    let steps = seqs[0].nrows();
    let dim = seqs[0].ncols();
    let size = seqs.len();
    let mut x = Array2::<f64>::zeros((steps * size, dim));
    for (b, seq) in seqs.iter().enumerate() {
        for t in 0..steps {
            x.row_mut(t * size + b).assign(&seq.row(t));
        }
    }
    Batch { x, steps, size }
}

struct ForwardPass {
    c1: LayerCache,
    in2: Array2<f64>,
    c2: LayerCache,
    last: Array2<f64>,
    probs: Vec<f64>,
    mask1: Option<Array2<f64>>,
    mask2: Option<Array2<f64>>,
}

fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let keep = 1.0 - rate;
    Array2::from_shape_fn((rows, cols), |_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
}

fn forward(params: &LstmParams, batch: &Batch, dropout: Option<(f64, &mut ChaCha8Rng)>) -> ForwardPass {
    let (steps, size) = (batch.steps, batch.size);
    let units = params.layer1.units();
    let c1 = layer_forward(&params.layer1, batch.x.view(), steps, size);
    let (mask1, mask2) = match dropout {
        Some((rate, rng)) if rate > 0.0 => (
            Some(dropout_mask(steps * size, units, rate, rng)),
            Some(dropout_mask(size, params.layer2.units(), rate, rng)),
        ),
        _ => (None, None),
    };
    let in2 = match &mask1 {
        Some(m) => &c1.hidden * m,
        None => c1.hidden.clone(),
    };
    let c2 = layer_forward(&params.layer2, in2.view(), steps, size);
    let mut last = c2.hidden.slice(s![(steps - 1) * size.., ..]).to_owned();
    if let Some(m) = &mask2 {
        last *= m;
    }
    let logits = last.dot(&params.head_w);
    let probs = logits.iter().map(|z| sigmoid(z + params.head_b)).collect();
    ForwardPass { c1, in2, c2, last, probs, mask1, mask2 }
}

fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Weighted mean binary cross-entropy and its gradient for one batch.
/// `weights[b]` multiplies the loss of sequence `b`; the mean is over the batch.
fn loss_and_grad(
    params: &LstmParams,
    batch: &Batch,
    labels: &[f64],
    weights: &[f64],
    dropout: Option<(f64, &mut ChaCha8Rng)>,
) -> (f64, LstmParams) {
    let fp = forward(params, batch, dropout);
    let (steps, size) = (batch.steps, batch.size);
    let n = size as f64;
    let mut loss = 0.0;
    let mut dlogit = Array1::<f64>::zeros(size);
    for b in 0..size {
        loss += weights[b] * bce(fp.probs[b], labels[b]);
        dlogit[b] = weights[b] * (fp.probs[b] - labels[b]) / n;
    }
    loss /= n;

    let mut grad = params.zeros_like();
    grad.head_w = fp.last.t().dot(&dlogit);
    grad.head_b = dlogit.sum();

    // Gradient reaching layer 2's final hidden state.
    let units2 = params.layer2.units();
    let mut d_last = Array2::<f64>::zeros((size, units2));
    for b in 0..size {
        for k in 0..units2 {
            d_last[[b, k]] = dlogit[b] * params.head_w[k];
        }
    }
    if let Some(m) = &fp.mask2 {
        d_last *= m;
    }
    let mut d_h2 = Array2::<f64>::zeros((steps * size, units2));
    d_h2.slice_mut(s![(steps - 1) * size.., ..]).assign(&d_last);

    let d_in2 = layer_backward(
        &params.layer2,
        &fp.c2,
        fp.in2.view(),
        &d_h2,
        steps,
        size,
        &mut grad.layer2,
        true,
    )
    .expect("input gradient requested");
    let d_h1 = match &fp.mask1 {
        Some(m) => d_in2 * m,
        None => d_in2,
    };
    layer_backward(&params.layer1, &fp.c1, batch.x.view(), &d_h1, steps, size, &mut grad.layer1, false);
    (loss, grad)
}

/// Loss and analytic gradient with dropout disabled. Exposed for gradient
/// checking.
pub fn batch_loss_and_gradient(
    params: &LstmParams,
    sequences: &[Array2<f64>],
    labels: &[f64],
    weights: &[f64],
) -> (f64, LstmParams) {
    let refs: Vec<&Array2<f64>> = sequences.iter().collect();
    let batch = make_batch(&refs);
    loss_and_grad(params, &batch, labels, weights, None)
}

/// Loss only, dropout disabled.
pub fn batch_loss(params: &LstmParams, sequences: &[Array2<f64>], labels: &[f64], weights: &[f64]) -> f64 {
    let refs: Vec<&Array2<f64>> = sequences.iter().collect();
    let batch = make_batch(&refs);
    let fp = forward(params, &batch, None);
    let n = labels.len() as f64;
    fp.probs.iter().zip(labels).zip(weights).map(|((p, y), w)| w * bce(*p, *y)).sum::<f64>() / n
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-7;

    fn new(params: &LstmParams) -> Self {
        let shapes: Vec<usize> = params.slices().iter().map(|s| s.len()).collect();
        Adam {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut LstmParams, grad: &LstmParams, lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.step);
        let bc2 = 1.0 - Self::BETA2.powi(self.step);
        let step_size = lr * bc2.sqrt() / bc1;
        for (((p, g), m), v) in params
            .slices_mut()
            .into_iter()
            .zip(grad.slices())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
                p[i] -= step_size * m[i] / (v[i].sqrt() + Self::EPS);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_monitor_loss: f64,
    pub final_learning_rate: f64,
    pub train_loss: Vec<f64>,
    pub monitor_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub params: LstmParams,
    /// Per-channel standardization fitted on the training sequences.
    pub normalizer: NormalizerState,
    pub config: LstmConfig,
}

impl LstmModel {
    pub fn input_dim(&self) -> usize {
        self.params.input_dim()
    }

    fn standardize(&self, seq: &Array2<f64>) -> Array2<f64> {
        let mut out = seq.clone();
        for mut row in out.rows_mut() {
            let r = row.as_slice_mut().expect("contiguous row");
            self.normalizer.apply_row_in_place(r);
        }
        out
    }

    /// Probability that `sequence` (T x D) belongs to the enrolled user.
    pub fn score(&self, sequence: &Array2<f64>) -> Result<f64, VerifierError> {
        Ok(self.score_batch(std::slice::from_ref(sequence))?[0])
    }

    pub fn score_batch(&self, sequences: &[Array2<f64>]) -> Result<Vec<f64>, VerifierError> {
        let d = self.input_dim();
        let mut out = Vec::with_capacity(sequences.len());
        for seq in sequences {
            if seq.nrows() == 0 || seq.ncols() != d {
                return Err(VerifierError::ShapeMismatch(format!(
                    "sequence {}x{} for a model expecting width {d}",
                    seq.nrows(),
                    seq.ncols()
                )));
            }
        }
        // Equal-length runs share one batched pass.
        let std: Vec<Array2<f64>> = sequences.iter().map(|s| self.standardize(s)).collect();
        let mut i = 0;
        while i < std.len() {
            let steps = std[i].nrows();
            let mut j = i;
            while j < std.len() && std[j].nrows() == steps && j - i < 64 {
                j += 1;
            }
            let refs: Vec<&Array2<f64>> = std[i..j].iter().collect();
            let fp = forward(&self.params, &make_batch(&refs), None);
            out.extend(fp.probs);
            i = j;
        }
        Ok(out)
    }
}

/// Inverse-frequency class weights: `n / (2 * n_class)`.
pub fn class_weights(labels: &[bool]) -> (f64, f64) {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let neg = n - pos;
    (n / (2.0 * neg), n / (2.0 * pos))
}

/// Indices of the validation hold-out: the last `fraction` of each class in
/// input order.
fn validation_split(labels: &[bool], fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [false, true] {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n_val = (idx.len() as f64 * fraction).floor() as usize;
        let cut = idx.len() - n_val;
        train.extend_from_slice(&idx[..cut]);
        val.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Trains the recurrent verifier. Sequences are T x D with identical shapes;
/// `labels[i]` is true for the genuine user.
pub fn train_lstm(
    sequences: &[Array2<f64>],
    labels: &[bool],
    cfg: &LstmConfig,
) -> Result<(LstmModel, TrainingSummary), VerifierError> {
    cfg.validate()?;
    if sequences.len() != labels.len() || sequences.is_empty() {
        return Err(VerifierError::ShapeMismatch("sequence and label counts differ".into()));
    }
    let (steps, dim) = sequences[0].dim();
    if steps == 0 || sequences.iter().any(|s| s.dim() != (steps, dim)) {
        return Err(VerifierError::ShapeMismatch("all sequences must share one non-empty shape".into()));
    }
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(VerifierError::SingleClass);
    }

    let (mut train_idx, mut val_idx) = validation_split(labels, cfg.validation_fraction);
    let has_val = [false, true].iter().all(|c| val_idx.iter().any(|&i| labels[i] == *c));
    if !has_val {
        train_idx = (0..labels.len()).collect();
        val_idx.clear();
    }

    let rows: Vec<&[f64]> = train_idx
        .iter()
        .flat_map(|&i| sequences[i].rows().into_iter().map(|r| r.to_slice().expect("contiguous")))
        .collect();
    let normalizer = NormalizerState::fit_rows(&rows).map_err(|e| VerifierError::InvalidConfig(e.to_string()))?;

    let mut model = LstmModel {
        params: LstmParams::init(dim, cfg.units_per_layer, cfg.seed),
        normalizer,
        config: cfg.clone(),
    };
    let data: Vec<Array2<f64>> = sequences.iter().map(|s| model.standardize(s)).collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();

    let train_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
    let (w_neg, w_pos) = if cfg.class_weighting { class_weights(&train_labels) } else { (1.0, 1.0) };
    let weight = |i: usize| if labels[i] { w_pos } else { w_neg };

    let monitor_set: Vec<usize> = if val_idx.is_empty() { train_idx.clone() } else { val_idx.clone() };
    let monitor = |params: &LstmParams| -> f64 {
        let mut total = 0.0;
        for chunk in monitor_set.chunks(64) {
            let refs: Vec<&Array2<f64>> = chunk.iter().map(|&i| &data[i]).collect();
            let fp = forward(params, &make_batch(&refs), None);
            total += fp.probs.iter().zip(chunk).map(|(p, &i)| bce(*p, y[i])).sum::<f64>();
        }
        total / monitor_set.len() as f64
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut adam = Adam::new(&model.params);
    let mut lr = cfg.learning_rate;
    let mut best = (monitor(&model.params), model.params.clone(), 0usize);
    let mut summary = TrainingSummary {
        epochs_run: 0,
        best_epoch: 0,
        best_monitor_loss: best.0,
        final_learning_rate: lr,
        train_loss: Vec::new(),
        monitor_loss: Vec::new(),
    };
    let mut stall = 0usize;
    let mut lr_stall = 0usize;
    let mut lr_best = best.0;

    for epoch in 1..=cfg.max_epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let refs: Vec<&Array2<f64>> = chunk.iter().map(|&i| &data[i]).collect();
            let batch = make_batch(&refs);
            let yb: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let wb: Vec<f64> = chunk.iter().map(|&i| weight(i)).collect();
            let (loss, mut grad) = loss_and_grad(&model.params, &batch, &yb, &wb, Some((cfg.dropout, &mut rng)));
            clip_gradient(&mut grad, cfg.clip_norm);
            epoch_loss += loss * chunk.len() as f64;
            adam.update(&mut model.params, &grad, lr);
        }
        summary.train_loss.push(epoch_loss / order.len() as f64);
        let m = monitor(&model.params);
        summary.monitor_loss.push(m);
        summary.epochs_run = epoch;

        if m < best.0 {
            best = (m, model.params.clone(), epoch);
            stall = 0;
        } else {
            stall += 1;
        }
        if m < lr_best - 1e-4 {
            lr_best = m;
            lr_stall = 0;
        } else {
            lr_stall += 1;
            if lr_stall >= cfg.lr_reduce_patience {
                lr *= cfg.lr_reduce_factor;
                lr_stall = 0;
            }
        }
        if stall >= cfg.early_stop_patience {
            break;
        }
    }
    summary.best_epoch = best.2;
    summary.best_monitor_loss = best.0;
    summary.final_learning_rate = lr;
    model.params = best.1;
    Ok((model, summary))
}

/// Rescales `grad` so its global L2 norm is at most `max_norm`.
pub fn clip_gradient(grad: &mut LstmParams, max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grad.slices().iter().flat_map(|s| s.iter()).map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for s in grad.slices_mut() {
            s.iter_mut().for_each(|g| *g *= k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_seq(freq: f64, steps: usize, phase: f64) -> Array2<f64> {
        Array2::from_shape_fn((steps, 2), |(t, d)| {
            let x = (2.0 * std::f64::consts::PI * freq * t as f64 / steps as f64 + phase).sin();
            if d == 0 { x } else { 0.5 * x }
        })
    }

    #[test]
    fn untrained_head_gives_half() {
        let params = LstmParams::init(3, 8, 1);
        let normalizer = NormalizerState::identity(3);
        let model = LstmModel { params, normalizer, config: LstmConfig::default() };
        let seq = Array2::from_shape_fn((20, 3), |(t, d)| (t * d) as f64 * 0.1);
        assert_eq!(model.score(&seq).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_shapes() {
        let params = LstmParams::init(3, 4, 1);
        let model = LstmModel { params, normalizer: NormalizerState::identity(3), config: LstmConfig::default() };
        assert!(matches!(model.score(&Array2::zeros((0, 3))), Err(VerifierError::ShapeMismatch(_))));
        assert!(matches!(model.score(&Array2::zeros((5, 2))), Err(VerifierError::ShapeMismatch(_))));
    }

    #[test]
    fn single_class_rejected() {
        let seqs = vec![sine_seq(1.0, 10, 0.0), sine_seq(2.0, 10, 0.0)];
        let err = train_lstm(&seqs, &[true, true], &LstmConfig::default()).unwrap_err();
        assert!(matches!(err, VerifierError::SingleClass));
    }

    #[test]
    fn balanced_weights_are_one() {
        assert_eq!(class_weights(&[true, false, true, false]), (1.0, 1.0));
        let (wn, wp) = class_weights(&[true, false, false, false]);
        assert_eq!((wn, wp), (4.0 / 6.0, 2.0));
    }

    #[test]
    fn validation_takes_tail_of_each_class() {
        let labels = [true, false, true, false, true, false, true, false, true, false];
        let (train, val) = validation_split(&labels, 0.2);
        assert_eq!(val, vec![8, 9]);
        assert_eq!(train.len(), 8);
    }

    #[test]
    fn training_is_reproducible() {
        let seqs: Vec<_> = (0..8).map(|i| sine_seq(if i % 2 == 0 { 1.0 } else { 4.0 }, 12, i as f64)).collect();
        let labels: Vec<bool> = (0..8).map(|i| i % 2 == 0).collect();
        let cfg = LstmConfig { units_per_layer: 6, max_epochs: 5, ..LstmConfig::default() };
        let (a, _) = train_lstm(&seqs, &labels, &cfg).unwrap();
        let (b, _) = train_lstm(&seqs, &labels, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
