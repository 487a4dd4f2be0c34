use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{init_network, Gradients, Network, Workspace};
use super::spec::{Activation, LayerSpec};
use crate::error::{Error, Result};
use crate::features::{compute_stats, FeatureMatrix, NormKind, NormStats};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Learning rate of the first epoch.
    pub lr: f64,
    /// Learning rate of the last epoch; linear in between.
    pub lr_final: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { batch_size: 265, lr: 0.02, lr_final: 0.002, epochs: 25, seed: 1, shuffle: true }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument("batch_size and epochs must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr_final >= 0.0 && self.lr.is_finite() && self.lr_final.is_finite()) {
            return Err(Error::InvalidArgument("learning rates must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Learning rate for zero-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.lr;
        }
        self.lr + (self.lr_final - self.lr) * epoch as f64 / (self.epochs - 1) as f64
    }
}

/// Normalised input/target rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub rows: usize,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Vec<T>, y: Vec<T>, in_dim: usize, out_dim: usize) -> Result<Self> {
        let rows = if in_dim == 0 { 0 } else { x.len() / in_dim };
        if x.len() != rows * in_dim || y.len() != rows * out_dim {
            return Err(Error::LengthMismatch { left: x.len() / in_dim.max(1), right: y.len() / out_dim.max(1) });
        }
        Ok(Self { x, y, rows, in_dim, out_dim })
    }

    /// Pairs of feature matrices, normalised with the given statistics.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a FeatureMatrix, &'a FeatureMatrix)>,
        input_stats: &NormStats,
        output_stats: &NormStats,
    ) -> Result<Self> {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        let (in_dim, out_dim) = (input_stats.dim(), output_stats.dim());
        let mut row = Vec::new();
        for (inp, out) in pairs {
            input_stats.check_width(inp.cols)?;
            output_stats.check_width(out.cols)?;
            if inp.rows != out.rows {
                return Err(Error::LengthMismatch { left: inp.rows, right: out.rows });
            }
            for (ri, ro) in inp.row_iter().zip(out.row_iter()) {
                row.clear();
                row.extend_from_slice(ri);
                input_stats.normalize_row(&mut row);
                x.extend(row.iter().map(|&v| T::of(v)));
                row.clear();
                row.extend_from_slice(ro);
                output_stats.normalize_row(&mut row);
                y.extend(row.iter().map(|&v| T::of(v)));
            }
        }
        Self::new(x, y, in_dim, out_dim)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.rows);
        Self {
            x: self.x[..n * self.in_dim].to_vec(),
            y: self.y[..n * self.out_dim].to_vec(),
            rows: n,
            in_dim: self.in_dim,
            out_dim: self.out_dim,
        }
    }

    /// 64-bit FNV-1a over the raw values.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.x.iter().chain(&self.y) {
            for b in v.f64().to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Per-element mean squared error of the network on `data`.
pub fn evaluate_mse<T: Scalar>(net: &Network<T>, data: &Dataset<T>) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut ws = Workspace::default();
    let chunk = 1024;
    let mut sum = 0.0;
    for start in (0..data.rows).step_by(chunk) {
        let n = chunk.min(data.rows - start);
        let out = net.forward_into(&data.x[start * data.in_dim..(start + n) * data.in_dim], n, &mut ws);
        for (p, t) in out.iter().zip(&data.y[start * data.out_dim..(start + n) * data.out_dim]) {
            let e = p.f64() - t.f64();
            sum += e * e;
        }
    }
    sum / (data.rows * data.out_dim) as f64
}

/// One pass of mini-batch SGD at learning rate `lr`, in place. The row
/// order is reshuffled from `(cfg.seed, epoch)`; the final batch may be
/// short. Returns the epoch's per-element mean squared error.
pub fn sgd_epoch<T: Scalar>(
    net: &mut Network<T>,
    data: &Dataset<T>,
    cfg: &TrainConfig,
    epoch: usize,
    lr: f64,
    first_layer: usize,
) -> Result<f64> {
    cfg.validate()?;
    if data.in_dim != net.input_dim() || data.out_dim != net.output_dim() {
        return Err(Error::SchemaMismatch(format!(
            "dataset is {}->{}, network is {}->{}",
            data.in_dim,
            data.out_dim,
            net.input_dim(),
            net.output_dim()
        )));
    }
    let mut order: Vec<usize> = (0..data.rows).collect();
    if cfg.shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
    }
    let mut ws = Workspace::default();
    let mut grads = Gradients::zeros(net);
    let (mut bx, mut by) = (Vec::new(), Vec::new());
    let lr_t = T::of(lr);
    let mut total = 0.0;
    for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
        bx.clear();
        by.clear();
        for &r in idx {
            bx.extend_from_slice(&data.x[r * data.in_dim..(r + 1) * data.in_dim]);
            by.extend_from_slice(&data.y[r * data.out_dim..(r + 1) * data.out_dim]);
        }
        let loss = net.backward(&bx, &by, idx.len(), &mut ws, &mut grads).f64();
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch });
        }
        total += loss * idx.len() as f64;
        net.apply_gradients(&grads, lr_t, first_layer);
    }
    Ok(total / (data.rows.max(1) * data.out_dim) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn first_loss(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.train_loss)
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(["epoch", "train_loss", "val_loss"]).map_err(to_err)?;
        for e in &self.epochs {
            let val = e.val_loss.map(|v| format!("{v:.9}")).unwrap_or_default();
            w.write_record([e.epoch.to_string(), format!("{:.9}", e.train_loss), val]).map_err(to_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::signal::write_atomic_bytes(path, self.to_csv()?.as_bytes())
    }
}

/// Runs `cfg.epochs` epochs with the decaying learning rate, updating layers
/// from `first_layer` upwards, scaled by `lr_scale`.
pub fn fit<T: Scalar>(
    net: &mut Network<T>,
    train: &Dataset<T>,
    val: Option<&Dataset<T>>,
    cfg: &TrainConfig,
    lr_scale: f64,
    first_layer: usize,
) -> Result<TrainingLog> {
    cfg.validate()?;
    let mut log = TrainingLog::default();
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch) * lr_scale;
        let train_loss = sgd_epoch(net, train, cfg, epoch, lr, first_layer)?;
        let val_loss = val.filter(|v| !v.is_empty()).map(|v| evaluate_mse(net, v));
        log::info!(
            "epoch {:>3}  lr {lr:.5}  train {train_loss:.6}{}",
            epoch + 1,
            val_loss.map(|v| format!("  val {v:.6}")).unwrap_or_default()
        );
        log.epochs.push(EpochRecord { epoch: epoch + 1, train_loss, val_loss });
        net.provenance.epochs_trained += 1;
    }
    Ok(log)
}

/// Input features and aligned output parameters of one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingUtterance {
    pub id: String,
    pub speaker: String,
    pub inputs: FeatureMatrix,
    pub outputs: FeatureMatrix,
}

fn pairs(utts: &[TrainingUtterance]) -> impl Iterator<Item = (&FeatureMatrix, &FeatureMatrix)> {
    utts.iter().map(|u| (&u.inputs, &u.outputs))
}

/// Trains a fresh network on pooled utterances with statistics from the
/// training set (inputs min-max, outputs mean-variance).
pub fn train_network<T: Scalar>(
    train: &[TrainingUtterance],
    val: &[TrainingUtterance],
    hidden: &[(usize, Activation)],
    cfg: &TrainConfig,
) -> Result<(Network<T>, TrainingLog)> {
    let first = train.first().ok_or_else(|| Error::InvalidArgument("empty training corpus".into()))?;
    let input_stats = compute_stats(train.iter().map(|u| &u.inputs), NormKind::MinMax)?;
    let output_stats = compute_stats(train.iter().map(|u| &u.outputs), NormKind::MeanVar)?;
    let data = Dataset::<T>::from_pairs(pairs(train), &input_stats, &output_stats)?;
    let val_data = Dataset::<T>::from_pairs(pairs(val), &input_stats, &output_stats)?;
    let spec = LayerSpec { input_dim: first.inputs.cols, hidden: hidden.to_vec(), output_dim: first.outputs.cols };
    let mut net = init_network::<T>(&spec, cfg.seed)?;
    net.input_stats = Some(input_stats);
    net.output_stats = Some(output_stats);
    net.provenance.corpus_digest = data.digest();
    let log = fit(&mut net, &data, Some(&val_data), cfg, 1.0, 0)?;
    Ok((net, log))
}

/// Average-voice model over at least two speakers.
pub fn train_avm<T: Scalar>(
    train: &[TrainingUtterance],
    val: &[TrainingUtterance],
    hidden: &[(usize, Activation)],
    cfg: &TrainConfig,
) -> Result<(Network<T>, TrainingLog)> {
    let speakers: std::collections::BTreeSet<&str> = train.iter().map(|u| u.speaker.as_str()).collect();
    if speakers.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "average voice training needs at least 2 speakers, found {}",
            speakers.len()
        )));
    }
    train_network(train, val, hidden, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayersToUpdate {
    All,
    /// The top `k` weight layers, output layer included.
    Top(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptConfig {
    pub lr_scale: f64,
    pub epochs: usize,
    pub layers: LayersToUpdate,
    /// Batch size, learning-rate schedule and seed of the fine-tuning run.
    pub train: TrainConfig,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self { lr_scale: 0.1, epochs: 10, layers: LayersToUpdate::All, train: TrainConfig::default() }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_scale > 0.0 && self.lr_scale <= 1.0) {
            return Err(Error::InvalidArgument(format!("lr_scale {} outside (0, 1]", self.lr_scale)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("adaptation needs at least one epoch".into()));
        }
        if let LayersToUpdate::Top(0) = self.layers {
            return Err(Error::InvalidArgument("at least one layer must be updated".into()));
        }
        self.train.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptReport {
    /// Validation MSE of the base network, in the target's normalised space.
    pub before_val: f64,
    pub after_val: f64,
    pub log: TrainingLog,
}

/// Swaps the output statistics and rescales the output layer so that
/// denormalised predictions stay exactly as before.
pub fn rebase_output_stats<T: Scalar>(net: &mut Network<T>, new_stats: NormStats) -> Result<()> {
    let old = net.output_stats.clone().ok_or_else(|| Error::SchemaMismatch("network has no output statistics".into()))?;
    old.check_width(new_stats.dim())?;
    if old.kind != NormKind::MeanVar || new_stats.kind != NormKind::MeanVar {
        return Err(Error::SchemaMismatch("output statistics must be mean-variance".into()));
    }
    let last = net.layers.last_mut().expect("network has layers");
    for j in 0..last.fan_out {
        let ratio = new_stats.scale[j] / old.scale[j];
        for i in 0..last.fan_in {
            let w = &mut last.weights[i * last.fan_out + j];
            *w = T::of(w.f64() * ratio);
        }
        let b = last.bias[j].f64();
        last.bias[j] = T::of((b / old.scale[j] + old.offset[j] - new_stats.offset[j]) * new_stats.scale[j]);
    }
    net.output_stats = Some(new_stats);
    Ok(())
}

/// Fine-tunes a copy of `base` on the target speaker.
pub fn adapt<T: Scalar>(
    base: &Network<T>,
    train: &[TrainingUtterance],
    val: &[TrainingUtterance],
    cfg: &AdaptConfig,
) -> Result<(Network<T>, AdaptReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty target corpus".into()));
    }
    let input_stats = base.input_stats.clone().ok_or_else(|| Error::SchemaMismatch("base has no input statistics".into()))?;
    for u in train.iter().chain(val) {
        if u.inputs.cols != base.input_dim() || u.outputs.cols != base.output_dim() {
            return Err(Error::SchemaMismatch(format!(
                "utterance {} is {}->{}, base network is {}->{}",
                u.id,
                u.inputs.cols,
                u.outputs.cols,
                base.input_dim(),
                base.output_dim()
            )));
        }
    }
    let mut net = base.clone();
    rebase_output_stats(&mut net, compute_stats(train.iter().map(|u| &u.outputs), NormKind::MeanVar)?)?;
    let output_stats = net.output_stats.clone().expect("just set");
    let data = Dataset::<T>::from_pairs(pairs(train), &input_stats, &output_stats)?;
    let val_data = Dataset::<T>::from_pairs(pairs(val), &input_stats, &output_stats)?;
    let before_val = evaluate_mse(&net, &val_data);
    let first_layer = match cfg.layers {
        LayersToUpdate::All => 0,
        LayersToUpdate::Top(k) => net.layers.len().saturating_sub(k),
    };
    let tcfg = TrainConfig { epochs: cfg.epochs, ..cfg.train.clone() };
    let log = fit(&mut net, &data, Some(&val_data), &tcfg, cfg.lr_scale, first_layer)?;
    let after_val = evaluate_mse(&net, &val_data);
    net.provenance.corpus_digest ^= data.digest();
    Ok((net, AdaptReport { before_val, after_val, log }))
}
