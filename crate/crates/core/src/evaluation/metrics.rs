use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::excitation::{F0Track, MvfTrack};
use crate::spectral::MgcTrack;

/// `10·√2 / ln 10`, the usual decibel constant of cepstral distortion.
pub const MCD_DB_SCALE: f64 = 6.141_851_463_713_754;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum McdScaling {
    /// Mean per-frame Euclidean distance, no constant.
    #[default]
    AsPrinted,
    /// Each frame term multiplied by [`MCD_DB_SCALE`].
    StandardDb,
}

impl FromStr for McdScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(Self::AsPrinted),
            "standard-db" => Ok(Self::StandardDb),
            _ => Err(Error::InvalidArgument(format!("unknown MCD scaling {s:?} (as-printed, standard-db)"))),
        }
    }
}

impl fmt::Display for McdScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AsPrinted => "as-printed",
            Self::StandardDb => "standard-db",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McdConfig {
    pub scaling: McdScaling,
    pub skip_c0: bool,
    /// Number of coefficients compared, counting c0. Tracks are truncated
    /// or zero-padded to it; `None` uses the tracks' own width.
    pub coefficients: Option<usize>,
}

impl Default for McdConfig {
    fn default() -> Self {
        Self { scaling: McdScaling::AsPrinted, skip_c0: true, coefficients: None }
    }
}

/// Cepstral distortion between row-major frame matrices of equal shape.
pub fn mcd_frames(x: &[f64], y: &[f64], width: usize, cfg: &McdConfig) -> Result<f64> {
    if width == 0 || x.len() % width != 0 {
        return Err(Error::InvalidArgument(format!("{} values do not form frames of width {width}", x.len())));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len() / width, right: y.len() / width });
    }
    let n = x.len() / width;
    if n == 0 {
        return Err(Error::TooShort("cepstral distortion needs at least one frame".into()));
    }
    let k = cfg.coefficients.unwrap_or(width);
    let first = usize::from(cfg.skip_c0);
    let scale = match cfg.scaling {
        McdScaling::AsPrinted => 1.0,
        McdScaling::StandardDb => MCD_DB_SCALE,
    };
    let mut total = 0.0;
    for (fx, fy) in x.chunks_exact(width).zip(y.chunks_exact(width)) {
        let hi = k.min(width);
        let ss: f64 = fx[first.min(hi)..hi].iter().zip(&fy[first.min(hi)..hi]).map(|(a, b)| (a - b) * (a - b)).sum();
        total += scale * ss.sqrt();
    }
    Ok(total / n as f64)
}

pub fn mcd(x: &MgcTrack, y: &MgcTrack, cfg: &McdConfig) -> Result<f64> {
    if x.order != y.order {
        return Err(Error::SchemaMismatch(format!("MGC orders differ: {} vs {}", x.order, y.order)));
    }
    if x.n_frames() != y.n_frames() {
        return Err(Error::LengthMismatch { left: x.n_frames(), right: y.n_frames() });
    }
    mcd_frames(&x.data, &y.data, x.width(), cfg)
}

/// Pearson correlation; undefined when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("{} frames, at least 2 needed", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("a track is constant".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// F0 correlation over all frames.
pub fn f0_corr(x: &F0Track, y: &F0Track) -> Result<f64> {
    pearson(&x.values, &y.values)
}

/// F0 correlation over the frames where the reference is voiced (> 0).
pub fn f0_corr_voiced(reference: &F0Track, produced: &F0Track) -> Result<f64> {
    if reference.len() != produced.len() {
        return Err(Error::LengthMismatch { left: reference.len(), right: produced.len() });
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        reference.values.iter().zip(&produced.values).filter(|(r, _)| **r > 0.0).map(|(r, p)| (*r, *p)).unzip();
    pearson(&x, &y)
}

/// Frame-indexed stream that can be cut to a prefix.
pub trait Track: Sized {
    fn n_frames(&self) -> usize;
    fn truncated(&self, n: usize) -> Self;
}

impl Track for F0Track {
    fn n_frames(&self) -> usize {
        self.len()
    }

    fn truncated(&self, n: usize) -> Self {
        F0Track::new(self.values[..n.min(self.len())].to_vec(), self.hop)
    }
}

impl Track for MvfTrack {
    fn n_frames(&self) -> usize {
        self.len()
    }

    fn truncated(&self, n: usize) -> Self {
        MvfTrack::new(self.values[..n.min(self.len())].to_vec(), self.hop)
    }
}

impl Track for MgcTrack {
    fn n_frames(&self) -> usize {
        MgcTrack::n_frames(self)
    }

    fn truncated(&self, n: usize) -> Self {
        let mut t = self.clone();
        t.data.truncate(n.min(self.n_frames()) * self.width());
        t
    }
}

impl Track for Vec<f64> {
    fn n_frames(&self) -> usize {
        self.len()
    }

    fn truncated(&self, n: usize) -> Self {
        self[..n.min(self.len())].to_vec()
    }
}

/// Cuts both tracks to the shorter length; returns the number of frames
/// dropped from the longer one.
pub fn align_tracks<T: Track>(a: &T, b: &T) -> (T, T, usize) {
    let (na, nb) = (a.n_frames(), b.n_frames());
    let n = na.min(nb);
    (a.truncated(n), b.truncated(n), na.max(nb) - n)
}
