//! PCA residual pulse built from GCI-centred residual cycles.

use std::fs;
use std::path::Path;

use super::{gci::lp_residual, F0Track, GciList};
use crate::dsp::{linalg::symmetric_eigen, window::hann};
use crate::error::{Error, Result};
use crate::scalar::{MatView, Scalar};
use crate::signal::Waveform;

pub const PROTOTYPE_LEN: usize = 512;
const MAGIC: &[u8; 4] = b"CVRP";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeConfig {
    pub length: usize,
    pub min_cycles: usize,
}

impl Default for PrototypeConfig {
    fn default() -> Self {
        Self { length: PROTOTYPE_LEN, min_cycles: 10 }
    }
}

/// Provenance of a freshly built prototype; not stored in the file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrototypeStats {
    pub component_index: usize,
    pub energy_share: f64,
    pub source_cycle_count: usize,
}

/// Unit-norm excitation pulse spanning two pitch periods, centred on the
/// closure instant, with its dominant peak negative.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualPrototype {
    pub pulse: Vec<f64>,
    pub stats: Option<PrototypeStats>,
}

impl ResidualPrototype {
    /// Normalises `pulse` to unit norm and negative dominant peak.
    pub fn from_pulse(pulse: Vec<f64>) -> Result<Self> {
        let norm = pulse.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("prototype pulse has zero or non-finite energy".into()));
        }
        let mut pulse: Vec<f64> = pulse.iter().map(|v| v / norm).collect();
        orient_negative(&mut pulse);
        Ok(Self { pulse, stats: None })
    }

    /// A Hann-shaped negative impulse; used when no voiced speech is
    /// available to learn from.
    pub fn impulse(len: usize) -> Self {
        let mut pulse = vec![0.0; len];
        pulse[len / 2] = -1.0;
        Self { pulse, stats: None }
    }

    pub fn len(&self) -> usize {
        self.pulse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulse.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + 4 * self.pulse.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.pulse.len() as u32).to_le_bytes());
        for &v in &self.pulse {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < 10 || &b[0..4] != MAGIC {
            return Err(Error::malformed("prototype file", "bad magic"));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(Error::malformed("prototype file", format!("unsupported version {version}")));
        }
        let len = u32::from_le_bytes([b[6], b[7], b[8], b[9]]) as usize;
        if b.len() != 10 + 4 * len {
            return Err(Error::malformed("prototype file", format!("expected {} samples", len)));
        }
        let pulse = b[10..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Self { pulse, stats: None })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::signal::write_atomic_bytes(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn orient_negative(v: &mut [f64]) {
    let peak = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if peak > 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Leading right singular vector of the row matrix `rows` (uncentred PCA)
/// and the share of total energy it explains.
///
/// Up to `dim` rows, the Gram matrix is diagonalised with Jacobi rotations;
/// beyond that, power iteration runs on the `dim x dim` second-moment matrix.
pub fn principal_component<T: Scalar>(rows: &[Vec<T>]) -> (Vec<T>, T) {
    let n = rows.len();
    assert!(n > 0, "no rows");
    let dim = rows[0].len();
    let flat: Vec<T> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let s = MatView::row_major(&flat, n, dim);
    let trace: T = flat.iter().map(|&v| v * v).sum();
    if trace == T::zero() {
        return (vec![T::zero(); dim], T::zero());
    }
    let mut v = vec![T::zero(); dim];
    let lambda;
    if n <= dim {
        let mut gram = vec![T::zero(); n * n];
        T::gemm(T::one(), s, s.t(), T::zero(), &mut gram);
        let (vals, vecs) = symmetric_eigen(&gram, n);
        lambda = vals[0];
        T::gemm(T::one(), MatView::row_major(&vecs[..n], 1, n), s, T::zero(), &mut v);
    } else {
        let mut cov = vec![T::zero(); dim * dim];
        T::gemm(T::one(), s.t(), s, T::zero(), &mut cov);
        // Start from the mean row; cycles share a sign so it is close.
        for r in rows {
            for (a, &b) in v.iter_mut().zip(r) {
                *a += b;
            }
        }
        if v.iter().all(|x| *x == T::zero()) {
            v[0] = T::one();
        }
        let mut next = vec![T::zero(); dim];
        let mut est = T::zero();
        for _ in 0..5000 {
            let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            T::gemm(T::one(), MatView::row_major(&cov, dim, dim), MatView::row_major(&v, dim, 1), T::zero(), &mut next);
            est = v.iter().zip(&next).map(|(&a, &b)| a * b).sum();
            let nn = next.iter().map(|&x| x * x).sum::<T>().sqrt();
            let delta: T = v.iter().zip(&next).map(|(&a, &b)| (a - b / nn) * (a - b / nn)).sum();
            std::mem::swap(&mut v, &mut next);
            if delta.sqrt() < T::epsilon() * T::of(16.0) {
                break;
            }
        }
        lambda = est;
    }
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm > T::zero() {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let share = (lambda / trace).max(T::zero()).min(T::one());
    (v, share)
}

/// Two-period Hann-windowed residual segment around `gci`, resampled to
/// `len` points.
fn cycle_segment(residual: &[f64], gci: usize, period: f64, len: usize) -> Vec<f64> {
    let span = 2.0 * period;
    let win = hann(len);
    (0..len)
        .map(|j| {
            let pos = gci as f64 - period + span * (j as f64 + 0.5) / len as f64;
            let i = pos.floor();
            let t = pos - i;
            let at = |k: f64| {
                if k >= 0.0 && (k as usize) < residual.len() {
                    residual[k as usize]
                } else {
                    0.0
                }
            };
            ((1.0 - t) * at(i) + t * at(i + 1.0)) * win[j]
        })
        .collect()
}

/// One utterance's contribution to a prototype.
pub struct PrototypeSource<'a> {
    pub wave: &'a Waveform,
    pub gcis: &'a GciList,
    pub f0: &'a F0Track,
}

pub fn build_residual_prototype(w: &Waveform, gcis: &GciList, f0: &F0Track, cfg: &PrototypeConfig) -> Result<ResidualPrototype> {
    build_residual_prototype_pooled(&[PrototypeSource { wave: w, gcis, f0 }], cfg)
}

/// Builds one prototype from the cycles of several utterances (one speaker
/// or a whole corpus).
pub fn build_residual_prototype_pooled(sources: &[PrototypeSource<'_>], cfg: &PrototypeConfig) -> Result<ResidualPrototype> {
    let found: usize = sources.iter().map(|s| s.gcis.len()).sum();
    if found < cfg.min_cycles {
        return Err(Error::InsufficientGcis { found, required: cfg.min_cycles });
    }
    let mut rows = Vec::with_capacity(found);
    for src in sources {
        let residual = lp_residual(src.wave);
        let sr = src.wave.sample_rate as f64;
        for &g in &src.gcis.instants {
            let period = sr / src.f0.at_sample(g as f64);
            rows.push(cycle_segment(&residual, g, period, cfg.length));
        }
    }
    let (mut pulse, share) = principal_component(&rows);
    if pulse.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidArgument("residual cycles carry no energy".into()));
    }
    orient_negative(&mut pulse);
    Ok(ResidualPrototype {
        pulse,
        stats: Some(PrototypeStats { component_index: 0, energy_share: share, source_cycle_count: rows.len() }),
    })
}
