use super::network::Network;
use super::spec::Activation;
use super::train::{train_network, TrainConfig, TrainingLog, TrainingUtterance};
use crate::error::{Error, Result};
use crate::excitation::{F0Track, MvfTrack};
use crate::features::{
    duration_targets, encode_duration_features, encode_linguistic_features, AlignedUtterance, FeatureMatrix,
    PhoneEntry, PhoneInventory,
};
use crate::scalar::Scalar;
use crate::signal::{FrameGrid, HOP_SECONDS};
use crate::spectral::{MgcTrack, MGC_ALPHA, MGC_GAMMA, MGC_ORDER};
use crate::synthesis::ParamTrack;

/// Column of the joint output vector holding log F0; MVF follows, then the
/// MGC coefficients.
pub const OUTPUT_LF0: usize = 0;
pub const OUTPUT_MVF: usize = 1;
pub const OUTPUT_MGC: usize = 2;

pub fn output_columns(order: usize) -> Vec<String> {
    let mut cols = vec!["lf0".to_string(), "mvf".to_string()];
    cols.extend((0..=order).map(|m| format!("mgc{m}")));
    cols
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictConfig {
    pub context: usize,
    pub sample_rate: u32,
    pub window_ms: f64,
    pub mvf_floor: f64,
    pub order: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            context: crate::features::CONTEXT,
            sample_rate: crate::signal::WORKING_RATE,
            window_ms: 25.0,
            mvf_floor: 800.0,
            order: MGC_ORDER,
            alpha: MGC_ALPHA,
            gamma: MGC_GAMMA,
        }
    }
}

/// Joint output rows `[lf0, mvf, mgc_0..mgc_order]` of a parameter track.
pub fn output_matrix(p: &ParamTrack) -> FeatureMatrix {
    let mut m = FeatureMatrix::new(p.n_frames(), output_columns(p.mgc.order));
    for i in 0..p.n_frames() {
        let row = m.row_mut(i);
        row[OUTPUT_LF0] = p.f0.values[i].ln();
        row[OUTPUT_MVF] = p.mvf.values[i];
        row[OUTPUT_MGC..].copy_from_slice(p.mgc.frame(i));
    }
    m
}

/// Frame-level training pair from an alignment and its analysed streams.
pub fn acoustic_training_pair(
    u: &AlignedUtterance,
    params: &ParamTrack,
    inv: &PhoneInventory,
    cfg: &PredictConfig,
) -> Result<TrainingUtterance> {
    let grid = FrameGrid::with_frames(params.n_frames(), params.sample_rate(), cfg.window_ms)?;
    Ok(TrainingUtterance {
        id: u.id.clone(),
        speaker: u.speaker.clone(),
        inputs: encode_linguistic_features(u, inv, &grid, cfg.context)?,
        outputs: output_matrix(params),
    })
}

/// Phone-level training pair with log-frame duration targets.
pub fn duration_training_pair(u: &AlignedUtterance, inv: &PhoneInventory, context: usize) -> Result<TrainingUtterance> {
    let frames = duration_targets(u, HOP_SECONDS);
    let rows = frames.iter().map(|&f| vec![f.max(1.0).ln()]).collect();
    Ok(TrainingUtterance {
        id: u.id.clone(),
        speaker: u.speaker.clone(),
        inputs: encode_duration_features(u, inv, context)?,
        outputs: FeatureMatrix::from_rows(rows, vec!["log_frames".into()]),
    })
}

pub fn train_duration_model<T: Scalar>(
    train: &[TrainingUtterance],
    val: &[TrainingUtterance],
    hidden: &[(usize, Activation)],
    cfg: &TrainConfig,
) -> Result<(Network<T>, TrainingLog)> {
    train_network(train, val, hidden, cfg)
}

/// Predicted durations are at least one frame.
pub fn clamp_duration(frames: f64) -> usize {
    if frames.is_nan() { 1 } else { frames.max(1.0).round() as usize }
}

/// Denormalised network outputs for raw (unnormalised) feature rows.
pub fn predict_raw<T: Scalar>(net: &Network<T>, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
    if fm.cols != net.input_dim() {
        return Err(Error::SchemaMismatch(format!("features have {} columns, network expects {}", fm.cols, net.input_dim())));
    }
    let mut x = Vec::with_capacity(fm.data.len());
    let mut row = Vec::with_capacity(fm.cols);
    for r in fm.row_iter() {
        row.clear();
        row.extend_from_slice(r);
        if let Some(s) = &net.input_stats {
            s.normalize_row(&mut row);
        }
        x.extend(row.iter().map(|&v| T::of(v)));
    }
    let y = net.forward(&x, fm.rows)?;
    let cols = (0..net.output_dim()).map(|j| format!("out{j}")).collect();
    let mut out = FeatureMatrix::new(fm.rows, cols);
    for (o, v) in out.data.iter_mut().zip(&y) {
        *o = v.f64();
    }
    if let Some(s) = &net.output_stats {
        s.denormalize(&mut out)?;
    }
    Ok(out)
}

pub fn predict_durations<T: Scalar>(net: &Network<T>, u: &AlignedUtterance, inv: &PhoneInventory, context: usize) -> Result<Vec<usize>> {
    if net.output_dim() != 1 {
        return Err(Error::SchemaMismatch(format!("duration network has {} outputs", net.output_dim())));
    }
    let out = predict_raw(net, &encode_duration_features(u, inv, context)?)?;
    Ok(out.data.iter().map(|&v| clamp_duration(v.exp())).collect())
}

/// Replaces the phone timings with predicted frame counts.
pub fn retime(u: &AlignedUtterance, frames: &[usize]) -> AlignedUtterance {
    let mut t = 0.0;
    let entries = u
        .entries
        .iter()
        .zip(frames)
        .map(|(e, &f)| {
            let start = t;
            t += f as f64 * HOP_SECONDS;
            PhoneEntry { phone: e.phone.clone(), start, end: t }
        })
        .collect();
    AlignedUtterance { id: u.id.clone(), speaker: u.speaker.clone(), entries }
}

fn moving_average3(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Parameter streams for an utterance. Phone timings come from the
/// duration network when given, else from the alignment.
pub fn predict_parameters<T: Scalar>(
    net: &Network<T>,
    duration_net: Option<&Network<T>>,
    u: &AlignedUtterance,
    inv: &PhoneInventory,
    cfg: &PredictConfig,
) -> Result<ParamTrack> {
    if net.output_dim() != OUTPUT_MGC + cfg.order + 1 {
        return Err(Error::SchemaMismatch(format!(
            "acoustic network has {} outputs, expected {}",
            net.output_dim(),
            OUTPUT_MGC + cfg.order + 1
        )));
    }
    let timed = match duration_net {
        Some(d) => retime(u, &predict_durations(d, u, inv, cfg.context)?),
        None => u.clone(),
    };
    let hop = FrameGrid::hop_for(cfg.sample_rate);
    let n_frames = ((timed.duration() * cfg.sample_rate as f64).round() as usize).div_ceil(hop).max(1);
    let grid = FrameGrid::with_frames(n_frames, cfg.sample_rate, cfg.window_ms)?;
    let out = predict_raw(net, &encode_linguistic_features(&timed, inv, &grid, cfg.context)?)?;
    let lf0: Vec<f64> = out.row_iter().map(|r| r[OUTPUT_LF0]).collect();
    let mvf: Vec<f64> = out.row_iter().map(|r| r[OUTPUT_MVF]).collect();
    let nyquist = cfg.sample_rate as f64 / 2.0;
    let f0 = F0Track::new(moving_average3(&lf0).into_iter().map(|v| v.clamp(-700.0, 700.0).exp()).collect(), hop);
    let mut mvf = MvfTrack::new(moving_average3(&mvf), hop);
    mvf.values.iter_mut().for_each(|v| *v = if v.is_nan() { cfg.mvf_floor } else { *v });
    mvf.clamp(cfg.mvf_floor, nyquist);
    let mgc_data = out.row_iter().flat_map(|r| r[OUTPUT_MGC..].to_vec()).collect();
    let mgc = MgcTrack::from_frames(mgc_data, cfg.order, cfg.alpha, cfg.gamma, hop, cfg.sample_rate)?;
    ParamTrack::new(f0, mvf, mgc)
}
