//! Feedforward network with an averaged Softmax output, written from
//! scratch on top of plain matrix arithmetic.
//!
//! An example is a *set* of equally wide input vectors. Every vector passes
//! through the same rectifier hidden stack, the resulting representations
//! are averaged element-wise (`u = (1/P) Σ xⱼ`), and a single affine layer
//! plus Softmax turns the pooled vector into a distribution over joint
//! (rule, position) classes. Averaging makes the output independent of the
//! number and order of input vectors; to make the independence exact in
//! floating point, vectors are summed in a canonical sorted order.
//!
//! Training is plain mini-batch gradient descent on cross-entropy with an
//! improvement-driven learning rate schedule: start at 0.01, halve the rate
//! when the epoch-over-epoch improvement of mean training loss falls below
//! 0.1, stop when it falls below 0.01 (both strict).
//!
//! Weight matrices are stored input-major (`w[input][output]`), which keeps
//! the first layer's pass over sparse binary input vectors a sum of
//! contiguous rows.

use std::time::Instant;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{EncodedExample, EncodedInputs};

/// Floor for log arguments in the cross-entropy.
const LOG_FLOOR: f64 = 1e-12;

/// `−log(max(p, 1e−12))`, except that a NaN probability stays NaN so that
/// numerical blow-ups surface as a non-finite loss instead of being masked
/// by the clamp.
fn clamped_neg_log(p: f64) -> f64 {
    if p.is_nan() {
        f64::NAN
    } else {
        -(p.max(LOG_FLOOR)).ln()
    }
}

/// One affine layer; `w` is input-major (`in_dim × out_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    w: Array2<f64>,
    b: Array1<f64>,
}

impl Layer {
    pub fn new(w: Array2<f64>, b: Array1<f64>) -> Result<Self, NetError> {
        if w.ncols() != b.len() {
            return Err(NetError::ShapeMismatch(format!(
                "weight matrix {}x{} does not match bias length {}",
                w.nrows(),
                w.ncols(),
                b.len()
            )));
        }
        Ok(Layer { w, b })
    }

    fn zeros_like(other: &Layer) -> Layer {
        Layer {
            w: Array2::zeros(other.w.raw_dim()),
            b: Array1::zeros(other.b.raw_dim()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.ncols()
    }

    /// Input-major weights (`in_dim × out_dim`).
    pub fn weights(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.b
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Hidden rectifier stack plus the pooled Softmax output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    hidden: Vec<Layer>,
    output: Layer,
}

impl NetworkParams {
    /// He-uniform initialization: weights zero-mean uniform with variance
    /// `2 / fan_in` (half-width `sqrt(6 / fan_in)`), biases zero.
    /// Deterministic for a given seed.
    pub fn init(
        input_dim: usize,
        class_count: usize,
        hidden_layers: usize,
        hidden_units: usize,
        seed: u64,
    ) -> Self {
        assert!(input_dim > 0 && class_count > 0);
        assert!(hidden_layers == 0 || hidden_units > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init_layer = |in_dim: usize, out_dim: usize| {
            let half_width = (6.0 / in_dim as f64).sqrt();
            let w = Array2::from_shape_fn((in_dim, out_dim), |_| {
                rng.gen_range(-half_width..half_width)
            });
            Layer { w, b: Array1::zeros(out_dim) }
        };
        let mut hidden = Vec::with_capacity(hidden_layers);
        let mut width = input_dim;
        for _ in 0..hidden_layers {
            hidden.push(init_layer(width, hidden_units));
            width = hidden_units;
        }
        let output = init_layer(width, class_count);
        NetworkParams { hidden, output }
    }

    /// Reassembles a network from stored layers, validating the dimension
    /// chain.
    pub fn from_layers(hidden: Vec<Layer>, output: Layer) -> Result<Self, NetError> {
        let mut width = hidden.first().map_or(output.in_dim(), Layer::in_dim);
        for layer in &hidden {
            if layer.in_dim() != width {
                return Err(NetError::ShapeMismatch(format!(
                    "hidden layer expects {} inputs, previous layer provides {width}",
                    layer.in_dim()
                )));
            }
            width = layer.out_dim();
        }
        if output.in_dim() != width {
            return Err(NetError::ShapeMismatch(format!(
                "output layer expects {} inputs, hidden stack provides {width}",
                output.in_dim()
            )));
        }
        Ok(NetworkParams { hidden, output })
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().map_or(self.output.in_dim(), Layer::in_dim)
    }

    pub fn class_count(&self) -> usize {
        self.output.out_dim()
    }

    pub fn hidden_layers(&self) -> &[Layer] {
        &self.hidden
    }

    pub fn output_layer(&self) -> &Layer {
        &self.output
    }

    fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.hidden.iter().chain(std::iter::once(&self.output))
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Layer::param_count).sum()
    }

    /// Flat parameter access in layer order (weights row-major, then bias),
    /// hidden layers first. Used by finite-difference checks.
    pub fn param(&self, index: usize) -> f64 {
        let (layer, offset) = self.locate(index);
        if offset < layer.w.len() {
            layer.w.as_slice().expect("row-major")[offset]
        } else {
            layer.b[offset - layer.w.len()]
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut remaining = index;
        for layer in self
            .hidden
            .iter_mut()
            .chain(std::iter::once(&mut self.output))
        {
            let count = layer.param_count();
            if remaining < count {
                if remaining < layer.w.len() {
                    layer.w.as_slice_mut().expect("row-major")[remaining] = value;
                } else {
                    layer.b[remaining - layer.w.len()] = value;
                }
                return;
            }
            remaining -= count;
        }
        panic!("parameter index {index} out of range");
    }

    fn locate(&self, index: usize) -> (&Layer, usize) {
        let mut remaining = index;
        for layer in self.layers() {
            let count = layer.param_count();
            if remaining < count {
                return (layer, remaining);
            }
            remaining -= count;
        }
        panic!("parameter index {index} out of range");
    }

    fn apply_step(&mut self, grads: &Gradients, lr: f64) {
        for (layer, grad) in self
            .hidden
            .iter_mut()
            .zip(&grads.hidden)
            .chain(std::iter::once((&mut self.output, &grads.output)))
        {
            layer.w.scaled_add(-lr, &grad.w);
            layer.b.scaled_add(-lr, &grad.b);
        }
    }
}

/// Gradients with the same shapes and flat ordering as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    hidden: Vec<Layer>,
    output: Layer,
}

impl Gradients {
    fn zeros_like(params: &NetworkParams) -> Self {
        Gradients {
            hidden: params.hidden.iter().map(Layer::zeros_like).collect(),
            output: Layer::zeros_like(&params.output),
        }
    }

    pub fn param(&self, index: usize) -> f64 {
        let mut remaining = index;
        for layer in self.hidden.iter().chain(std::iter::once(&self.output)) {
            let count = layer.param_count();
            if remaining < count {
                return if remaining < layer.w.len() {
                    layer.w.as_slice().expect("row-major")[remaining]
                } else {
                    layer.b[remaining - layer.w.len()]
                };
            }
            remaining -= count;
        }
        panic!("parameter index {index} out of range");
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("input vector width {got} does not match network input width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("at least one input vector is required")]
    EmptyInputs,
    #[error("inconsistent layer shapes: {0}")]
    ShapeMismatch(String),
}

fn relu_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

fn softmax_inplace(row: &mut Array1<f64>) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    *row /= sum;
}

/// Canonical order of dense vectors: lexicographic by total float order.
fn dense_canonical_order(inputs: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by(|&a, &b| {
        inputs[a]
            .iter()
            .zip(&inputs[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Full forward pass over a set of dense input vectors.
///
/// Each vector runs through the hidden stack, the representations are
/// averaged in canonical (sorted) order, and the output layer's Softmax
/// yields a distribution over classes. The result is exactly invariant
/// under permutations of `inputs`.
pub fn forward(params: &NetworkParams, inputs: &[Vec<f64>]) -> Result<Array1<f64>, NetError> {
    if inputs.is_empty() {
        return Err(NetError::EmptyInputs);
    }
    let expected = params.input_dim();
    for v in inputs {
        if v.len() != expected {
            return Err(NetError::WidthMismatch { expected, got: v.len() });
        }
    }
    let mut pooled = Array1::<f64>::zeros(params.output.in_dim());
    for &i in &dense_canonical_order(inputs) {
        let mut a = Array1::from_vec(inputs[i].clone());
        for layer in &params.hidden {
            a = a.dot(&layer.w) + &layer.b;
            a.mapv_inplace(|v| v.max(0.0));
        }
        pooled += &a;
    }
    pooled /= inputs.len() as f64;
    let mut logits = pooled.dot(&params.output.w) + &params.output.b;
    softmax_inplace(&mut logits);
    Ok(logits)
}

/// Forward pass over sparsely stored binary input vectors.
pub fn forward_encoded(params: &NetworkParams, inputs: &EncodedInputs) -> Result<Array1<f64>, NetError> {
    if inputs.vectors.is_empty() {
        return Err(NetError::EmptyInputs);
    }
    if inputs.width != params.input_dim() {
        return Err(NetError::WidthMismatch { expected: params.input_dim(), got: inputs.width });
    }
    let mut sorted: Vec<&Vec<u32>> = inputs.vectors.iter().collect();
    sorted.sort();
    let mut pooled = Array1::<f64>::zeros(params.output.in_dim());
    for ones in sorted {
        let mut a = match params.hidden.first() {
            Some(first) => {
                let mut z = first.b.clone();
                for &j in ones {
                    z += &first.w.row(j as usize);
                }
                z.mapv_inplace(|v| v.max(0.0));
                z
            }
            None => {
                let mut z = Array1::zeros(inputs.width);
                for &j in ones {
                    z[j as usize] = 1.0;
                }
                z
            }
        };
        for layer in params.hidden.iter().skip(1) {
            a = a.dot(&layer.w) + &layer.b;
            a.mapv_inplace(|v| v.max(0.0));
        }
        pooled += &a;
    }
    pooled /= inputs.vectors.len() as f64;
    let mut logits = pooled.dot(&params.output.w) + &params.output.b;
    softmax_inplace(&mut logits);
    Ok(logits)
}

/// Cross-entropy of one prediction: `−log(probs[target])`, log argument
/// clamped at `1e-12`.
pub fn loss(probs: &Array1<f64>, target: usize) -> f64 {
    clamped_neg_log(probs[target])
}

/// All classes sorted by descending probability, ties by ascending index.
pub fn rank_classes(probs: &Array1<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order
}

/// Ranked class prediction over dense inputs.
pub fn predict(params: &NetworkParams, inputs: &[Vec<f64>]) -> Result<Vec<usize>, NetError> {
    Ok(rank_classes(&forward(params, inputs)?))
}

/// Ranked class prediction over sparse inputs.
pub fn predict_encoded(params: &NetworkParams, inputs: &EncodedInputs) -> Result<Vec<usize>, NetError> {
    Ok(rank_classes(&forward_encoded(params, inputs)?))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("example {index} has width {got}, expected {expected}")]
    WidthMismatch { index: usize, expected: usize, got: usize },
    #[error("example {index} has no input vectors")]
    EmptyExample { index: usize },
    #[error("example {index} target {target} is outside class count {classes}")]
    TargetOutOfRange { index: usize, target: usize, classes: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub init_lr: f64,
    pub halve_threshold: f64,
    pub stop_threshold: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub max_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_layers: 3,
            hidden_units: 1024,
            init_lr: 0.01,
            halve_threshold: 0.1,
            stop_threshold: 0.01,
            batch_size: 32,
            seed: 0,
            max_epochs: 200,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: &str| Err(TrainError::InvalidConfig(msg.to_string()));
        if !(self.init_lr.is_finite() && self.init_lr > 0.0) {
            return fail("initial learning rate must be positive and finite");
        }
        if self.halve_threshold <= 0.0 || self.stop_threshold <= 0.0 {
            return fail("schedule thresholds must be positive");
        }
        if self.halve_threshold <= self.stop_threshold {
            return fail("halve threshold must exceed stop threshold");
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1");
        }
        if self.max_epochs == 0 {
            return fail("at least one epoch is required");
        }
        if self.hidden_layers > 0 && self.hidden_units == 0 {
            return fail("hidden layers need at least one unit");
        }
        Ok(())
    }
}

/// Improvement-driven learning rate schedule.
///
/// After each epoch, `observe` takes the epoch's mean training loss. The
/// improvement is the previous epoch's loss minus the current one; when it
/// is below the halve threshold the rate is halved for the next epoch, and
/// when it is below the stop threshold training ends. Both comparisons are
/// strict, so an improvement exactly equal to a threshold continues.
#[derive(Debug, Clone, PartialEq)]
pub struct NewbobSchedule {
    lr: f64,
    halve_threshold: f64,
    stop_threshold: f64,
    prev_loss: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleDecision {
    Continue,
    Stop,
}

impl NewbobSchedule {
    pub fn new(init_lr: f64, halve_threshold: f64, stop_threshold: f64) -> Self {
        NewbobSchedule { lr: init_lr, halve_threshold, stop_threshold, prev_loss: None }
    }

    /// Learning rate to use for the next epoch.
    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn observe(&mut self, epoch_loss: f64) -> ScheduleDecision {
        let decision = match self.prev_loss {
            None => ScheduleDecision::Continue,
            Some(prev) => {
                let improvement = prev - epoch_loss;
                if improvement < self.stop_threshold {
                    ScheduleDecision::Stop
                } else {
                    if improvement < self.halve_threshold {
                        self.lr /= 2.0;
                    }
                    ScheduleDecision::Continue
                }
            }
        };
        self.prev_loss = Some(epoch_loss);
        decision
    }
}

/// One epoch's record in a learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training cross-entropy over the epoch's batches.
    pub loss: f64,
    /// Learning rate the epoch was trained with.
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub epochs: Vec<EpochStats>,
}

impl LearningCurve {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

/// Dataset view with canonically sorted per-example vectors.
struct Prepared<'a> {
    vectors: Vec<Vec<&'a [u32]>>,
    targets: Vec<usize>,
}

fn prepare<'a>(
    examples: &'a [EncodedExample],
    class_count: usize,
) -> Result<(Prepared<'a>, usize), TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let width = examples[0].inputs.width;
    let mut vectors = Vec::with_capacity(examples.len());
    let mut targets = Vec::with_capacity(examples.len());
    for (index, example) in examples.iter().enumerate() {
        if example.inputs.width != width {
            return Err(TrainError::WidthMismatch { index, expected: width, got: example.inputs.width });
        }
        if example.inputs.vectors.is_empty() {
            return Err(TrainError::EmptyExample { index });
        }
        if example.target >= class_count {
            return Err(TrainError::TargetOutOfRange {
                index,
                target: example.target,
                classes: class_count,
            });
        }
        let mut sorted: Vec<&[u32]> = example.inputs.vectors.iter().map(Vec::as_slice).collect();
        sorted.sort();
        vectors.push(sorted);
        targets.push(example.target);
    }
    Ok((Prepared { vectors, targets }, width))
}

/// Mean loss and mean-loss gradients over one batch (indices into `prep`).
fn run_batch(
    params: &NetworkParams,
    prep: &Prepared<'_>,
    batch: &[usize],
    compute_grads: bool,
) -> (f64, Option<Gradients>) {
    let b = batch.len();
    let total_rows: usize = batch.iter().map(|&e| prep.vectors[e].len()).sum();
    let pooled_dim = params.output.in_dim();

    // Row ranges per example in the stacked activation matrices.
    let mut segments = Vec::with_capacity(b);
    let mut row = 0;
    for &e in batch {
        let p = prep.vectors[e].len();
        segments.push((row, row + p));
        row += p;
    }

    // Forward through the hidden stack; activations kept for backprop.
    // activations[l] has shape (total_rows, layer l out_dim).
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(params.hidden.len());
    for (l, layer) in params.hidden.iter().enumerate() {
        let mut z = Array2::zeros((total_rows, layer.out_dim()));
        if l == 0 {
            for (seg_idx, &e) in batch.iter().enumerate() {
                let (start, _) = segments[seg_idx];
                for (offset, ones) in prep.vectors[e].iter().enumerate() {
                    let mut target_row = z.row_mut(start + offset);
                    target_row += &layer.b;
                    for &j in *ones {
                        target_row += &layer.w.row(j as usize);
                    }
                }
            }
        } else {
            z = activations[l - 1].dot(&layer.w) + &layer.b;
        }
        relu_inplace(&mut z);
        activations.push(z);
    }

    // Pooled representation per example.
    let mut pooled = Array2::zeros((b, pooled_dim));
    match activations.last() {
        Some(last) => {
            for (seg_idx, &(start, end)) in segments.iter().enumerate() {
                let p = (end - start) as f64;
                let mut u = pooled.row_mut(seg_idx);
                for r in start..end {
                    u += &last.row(r);
                }
                u /= p;
            }
        }
        None => {
            // Identity stack: pool the raw binary vectors.
            for (seg_idx, &e) in batch.iter().enumerate() {
                let p = prep.vectors[e].len() as f64;
                let mut u = pooled.row_mut(seg_idx);
                for ones in &prep.vectors[e] {
                    for &j in *ones {
                        u[j as usize] += 1.0;
                    }
                }
                u /= p;
            }
        }
    }
    // Output layer and per-example Softmax + loss.
    let mut probs = pooled.dot(&params.output.w) + &params.output.b;
    let mut loss_sum = 0.0;
    for (seg_idx, &e) in batch.iter().enumerate() {
        let mut row = probs.row_mut(seg_idx);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
        loss_sum += clamped_neg_log(row[prep.targets[e]]);
    }
    let mean_loss = loss_sum / b as f64;
    if !compute_grads {
        return (mean_loss, None);
    }

    let mut grads = Gradients::zeros_like(params);

    // d(mean loss)/d(logits) = (p − onehot(target)) / B.
    let mut dlogits = probs;
    for (seg_idx, &e) in batch.iter().enumerate() {
        dlogits[(seg_idx, prep.targets[e])] -= 1.0;
    }
    dlogits /= b as f64;

    grads.output.w = pooled.t().dot(&dlogits);
    grads.output.b = dlogits.sum_axis(Axis(0));
    let dpooled = dlogits.dot(&params.output.w.t());

    if params.hidden.is_empty() {
        return (mean_loss, Some(grads));
    }

    // Spread the pooled gradient back to rows: each of an example's P
    // vectors receives 1/P of it.
    let mut dact = Array2::zeros((total_rows, pooled_dim));
    for (seg_idx, &(start, end)) in segments.iter().enumerate() {
        let scale = 1.0 / (end - start) as f64;
        let source = dpooled.row(seg_idx);
        for r in start..end {
            let mut row = dact.row_mut(r);
            row.assign(&source);
            row *= scale;
        }
    }

    for l in (0..params.hidden.len()).rev() {
        // Rectifier gate: gradient flows only where the activation is live.
        let mut dz = dact;
        Zip::from(&mut dz).and(&activations[l]).for_each(|d, &a| {
            if a <= 0.0 {
                *d = 0.0;
            }
        });
        grads.hidden[l].b = dz.sum_axis(Axis(0));
        if l == 0 {
            let dw = &mut grads.hidden[0].w;
            for (seg_idx, &e) in batch.iter().enumerate() {
                let (start, _) = segments[seg_idx];
                for (offset, ones) in prep.vectors[e].iter().enumerate() {
                    let source = dz.row(start + offset);
                    for &j in *ones {
                        let mut target_row = dw.row_mut(j as usize);
                        target_row += &source;
                    }
                }
            }
            dact = dz; // unused afterwards
        } else {
            grads.hidden[l].w = activations[l - 1].t().dot(&dz);
            dact = dz.dot(&params.hidden[l].w.t());
        }
    }
    (mean_loss, Some(grads))
}

/// Mean cross-entropy of `examples` under `params` (no gradients).
pub fn batch_mean_loss(
    params: &NetworkParams,
    examples: &[EncodedExample],
) -> Result<f64, TrainError> {
    let (prep, width) = prepare(examples, params.class_count())?;
    check_width(params, width)?;
    let batch: Vec<usize> = (0..examples.len()).collect();
    Ok(run_batch(params, &prep, &batch, false).0)
}

/// Mean cross-entropy and its exact gradients over `examples`.
pub fn batch_gradients(
    params: &NetworkParams,
    examples: &[EncodedExample],
) -> Result<(f64, Gradients), TrainError> {
    let (prep, width) = prepare(examples, params.class_count())?;
    check_width(params, width)?;
    let batch: Vec<usize> = (0..examples.len()).collect();
    let (loss, grads) = run_batch(params, &prep, &batch, true);
    Ok((loss, grads.expect("gradients requested")))
}

fn check_width(params: &NetworkParams, width: usize) -> Result<(), TrainError> {
    if width != params.input_dim() {
        return Err(TrainError::WidthMismatch { index: 0, expected: params.input_dim(), got: width });
    }
    Ok(())
}

/// Trains a fresh network on `examples`.
///
/// Mini-batch order is reshuffled every epoch from a seeded generator, so
/// the whole run (initial weights, batch order, schedule decisions, final
/// parameters) is a pure function of the dataset and the configuration.
pub fn train(
    examples: &[EncodedExample],
    class_count: usize,
    cfg: &TrainConfig,
) -> Result<(NetworkParams, LearningCurve), TrainError> {
    cfg.validate()?;
    let (prep, width) = prepare(examples, class_count)?;
    let mut params = NetworkParams::init(
        width,
        class_count,
        cfg.hidden_layers,
        cfg.hidden_units,
        cfg.seed,
    );
    // Separate stream from initialization so layer count does not change
    // the shuffle sequence.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut schedule = NewbobSchedule::new(cfg.init_lr, cfg.halve_threshold, cfg.stop_threshold);
    let mut curve = LearningCurve::default();

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let lr = schedule.lr();
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (batch_loss, grads) = run_batch(&params, &prep, batch, true);
            if !batch_loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            loss_sum += batch_loss * batch.len() as f64;
            params.apply_step(&grads.expect("gradients requested"), lr);
        }
        let epoch_loss = loss_sum / examples.len() as f64;
        curve.epochs.push(EpochStats {
            epoch,
            loss: epoch_loss,
            lr,
            seconds: started.elapsed().as_secs_f64(),
        });
        if schedule.observe(epoch_loss) == ScheduleDecision::Stop {
            break;
        }
    }
    Ok((params, curve))
}
