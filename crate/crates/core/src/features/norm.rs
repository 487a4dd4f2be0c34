use std::path::Path;

use super::FeatureMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CVST";
const VERSION: u16 = 1;
pub const MIN_TARGET: f64 = 0.01;
pub const MAX_TARGET: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Inputs: affine map of each column's range onto [0.01, 0.99].
    MinMax,
    /// Outputs: zero mean, unit variance.
    MeanVar,
}

/// Column-wise affine normalisation `y = (x - offset) * scale + bias`.
/// Zero-variance columns are flagged and passed through unscaled (min-max
/// leaves them unchanged, mean-variance only removes the mean).
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub kind: NormKind,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    fn bias(&self, j: usize) -> f64 {
        match (self.kind, self.degenerate[j]) {
            (NormKind::MinMax, false) => MIN_TARGET,
            _ => 0.0,
        }
    }

    pub fn normalize_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.offset[j]) * self.scale[j] + self.bias(j);
        }
    }

    pub fn denormalize_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.bias(j)) / self.scale[j] + self.offset[j];
        }
    }

    pub fn normalize(&self, m: &mut FeatureMatrix) -> Result<()> {
        self.check_width(m.cols)?;
        m.data.chunks_exact_mut(m.cols.max(1)).for_each(|r| self.normalize_row(r));
        Ok(())
    }

    pub fn denormalize(&self, m: &mut FeatureMatrix) -> Result<()> {
        self.check_width(m.cols)?;
        m.data.chunks_exact_mut(m.cols.max(1)).for_each(|r| self.denormalize_row(r));
        Ok(())
    }

    pub fn check_width(&self, cols: usize) -> Result<()> {
        if cols != self.dim() {
            return Err(Error::SchemaMismatch(format!("{cols} columns, statistics cover {}", self.dim())));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(11 + 17 * self.dim());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(match self.kind {
            NormKind::MinMax => 0,
            NormKind::MeanVar => 1,
        });
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for j in 0..self.dim() {
            out.extend_from_slice(&self.offset[j].to_le_bytes());
            out.extend_from_slice(&self.scale[j].to_le_bytes());
            out.push(self.degenerate[j] as u8);
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = |r: &str| Error::malformed("normalisation statistics", r);
        if b.len() < 11 || &b[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let kind = match b[6] {
            0 => NormKind::MinMax,
            1 => NormKind::MeanVar,
            k => return Err(bad(&format!("unknown kind {k}"))),
        };
        let dim = u32::from_le_bytes([b[7], b[8], b[9], b[10]]) as usize;
        if b.len() != 11 + 17 * dim {
            return Err(bad("length does not match column count"));
        }
        let f = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let (mut offset, mut scale, mut degenerate) = (Vec::new(), Vec::new(), Vec::new());
        for j in 0..dim {
            let o = 11 + 17 * j;
            offset.push(f(o));
            scale.push(f(o + 8));
            degenerate.push(b[o + 16] != 0);
        }
        Ok(Self { kind, offset, scale, degenerate })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::signal::write_atomic_bytes(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Statistics over all rows of all matrices (single pass, Welford update
/// for the variance).
pub fn compute_stats<'a>(corpus: impl IntoIterator<Item = &'a FeatureMatrix>, kind: NormKind) -> Result<NormStats> {
    let mut dim = None;
    let (mut lo, mut hi, mut mean, mut m2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut count = 0usize;
    for m in corpus {
        match dim {
            None => {
                dim = Some(m.cols);
                lo = vec![f64::INFINITY; m.cols];
                hi = vec![f64::NEG_INFINITY; m.cols];
                mean = vec![0.0; m.cols];
                m2 = vec![0.0; m.cols];
            }
            Some(d) if d != m.cols => return Err(Error::SchemaMismatch(format!("{} columns after {d}", m.cols))),
            _ => {}
        }
        for r in m.row_iter() {
            count += 1;
            for (j, &v) in r.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
                let d = v - mean[j];
                mean[j] += d / count as f64;
                m2[j] += d * (v - mean[j]);
            }
        }
    }
    let dim = dim.ok_or_else(|| Error::InvalidArgument("no feature matrices".into()))?;
    if count == 0 {
        return Err(Error::InvalidArgument("no feature rows".into()));
    }
    let degenerate: Vec<bool> = (0..dim).map(|j| !(hi[j] > lo[j])).collect();
    let (offset, scale) = match kind {
        NormKind::MinMax => (
            (0..dim).map(|j| if degenerate[j] { 0.0 } else { lo[j] }).collect(),
            (0..dim).map(|j| if degenerate[j] { 1.0 } else { (MAX_TARGET - MIN_TARGET) / (hi[j] - lo[j]) }).collect(),
        ),
        NormKind::MeanVar => (
            mean.clone(),
            (0..dim)
                .map(|j| {
                    let sd = (m2[j] / count as f64).sqrt();
                    if degenerate[j] || !(sd > 0.0) { 1.0 } else { 1.0 / sd }
                })
                .collect(),
        ),
    };
    Ok(NormStats { kind, offset, scale, degenerate })
}
