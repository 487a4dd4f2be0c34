use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::signal::{decode_stream, encode_stream, write_atomic_bytes};

/// Frame-major MGC coefficients with the analysis settings that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct MgcTrack {
    /// `n_frames * (order + 1)` coefficients.
    pub data: Vec<f64>,
    pub order: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub hop: usize,
    pub sample_rate: u32,
    /// Frames whose generalized fit did not converge.
    pub fallback_frames: usize,
}

impl MgcTrack {
    pub fn new(order: usize, alpha: f64, gamma: f64, hop: usize, sample_rate: u32) -> Self {
        Self { data: Vec::new(), order, alpha, gamma, hop, sample_rate, fallback_frames: 0 }
    }

    pub fn from_frames(data: Vec<f64>, order: usize, alpha: f64, gamma: f64, hop: usize, sample_rate: u32) -> Result<Self> {
        if data.len() % (order + 1) != 0 {
            return Err(Error::InvalidArgument(format!("{} values do not split into frames of {}", data.len(), order + 1)));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite MGC coefficient".into()));
        }
        Ok(Self { data, order, alpha, gamma, hop, sample_rate, fallback_frames: 0 })
    }

    pub fn width(&self) -> usize {
        self.order + 1
    }

    pub fn n_frames(&self) -> usize {
        self.data.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width())
    }

    pub fn push_frame(&mut self, c: &[f64]) {
        assert_eq!(c.len(), self.width());
        self.data.extend_from_slice(c);
    }

    /// Fails unless the track was produced with the given settings.
    pub fn check(&self, order: usize, alpha: f64, gamma: f64) -> Result<()> {
        if self.order != order || (self.alpha - alpha).abs() > 1e-6 || (self.gamma - gamma).abs() > 1e-6 {
            return Err(Error::SchemaMismatch(format!(
                "MGC track has order {} alpha {} gamma {}, expected order {order} alpha {alpha} gamma {gamma}",
                self.order, self.alpha, self.gamma
            )));
        }
        Ok(())
    }
}

/// `foo.mgc` -> `foo.mgc.meta`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_mgc(path: &Path, track: &MgcTrack) -> Result<()> {
    write_atomic_bytes(path, &encode_stream(&track.data))?;
    let meta = format!(
        "order={}\nalpha={}\ngamma={}\nhop_ms={}\nsample_rate={}\n",
        track.order,
        track.alpha,
        track.gamma,
        track.hop as f64 * 1000.0 / track.sample_rate as f64,
        track.sample_rate
    );
    write_atomic_bytes(&sidecar_path(path), meta.as_bytes())
}

/// Reads an `.mgc` stream and its sidecar metadata.
pub fn read_mgc(path: &Path) -> Result<MgcTrack> {
    let meta_path = sidecar_path(path);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let what = meta_path.display().to_string();
    let mut fields = std::collections::HashMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::malformed(&what, format!("line {line:?} is not key=value")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| -> Result<f64> {
        fields
            .get(key)
            .ok_or_else(|| Error::malformed(&what, format!("missing {key}")))?
            .parse::<f64>()
            .map_err(|e| Error::malformed(&what, format!("{key}: {e}")))
    };
    let order = get("order")? as usize;
    let sample_rate = get("sample_rate")? as u32;
    let hop = (get("hop_ms")? / 1000.0 * sample_rate as f64).round() as usize;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let data = decode_stream(&bytes, &path.display().to_string())?;
    MgcTrack::from_frames(data, order, get("alpha")?, get("gamma")?, hop, sample_rate)
        .map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))
}
