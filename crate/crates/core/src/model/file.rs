//! Model file: "CVDN", version, topology, float32 weights, statistics and
//! provenance, all little-endian.

use std::path::Path;

use super::network::{Layer, Network, Provenance};
use super::spec::{Activation, LayerSpec};
use crate::error::{Error, Result};
use crate::features::NormStats;
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"CVDN";
const VERSION: u16 = 1;

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.b.len() {
            return Err(Error::malformed("model file", format!("truncated at byte {}", self.pos)));
        }
        let s = &self.b[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self.take(4 * n)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn put_stats(out: &mut Vec<u8>, s: &Option<NormStats>) {
    match s {
        Some(s) => {
            let b = s.to_bytes();
            out.push(1);
            out.extend_from_slice(&(b.len() as u32).to_le_bytes());
            out.extend_from_slice(&b);
        }
        None => out.push(0),
    }
}

fn get_stats(r: &mut Reader<'_>) -> Result<Option<NormStats>> {
    match r.u8()? {
        0 => Ok(None),
        1 => {
            let n = r.u32()? as usize;
            Ok(Some(NormStats::from_bytes(r.take(n)?)?))
        }
        t => Err(Error::malformed("model file", format!("bad statistics flag {t}"))),
    }
}

impl<T: Scalar> Network<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.n_parameters());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.fan_in as u32).to_le_bytes());
            out.extend_from_slice(&(l.fan_out as u32).to_le_bytes());
            out.push(l.activation.tag());
        }
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.bias) {
                out.extend_from_slice(&(v.f64() as f32).to_le_bytes());
            }
        }
        put_stats(&mut out, &self.input_stats);
        put_stats(&mut out, &self.output_stats);
        out.extend_from_slice(&self.provenance.seed.to_le_bytes());
        out.extend_from_slice(&self.provenance.epochs_trained.to_le_bytes());
        out.extend_from_slice(&self.provenance.corpus_digest.to_le_bytes());
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = |r: String| Error::malformed("model file", r);
        let mut r = Reader { b, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        if n == 0 || n > 1024 {
            return Err(bad(format!("implausible layer count {n}")));
        }
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            let (fi, fo) = (r.u32()? as usize, r.u32()? as usize);
            let act = Activation::from_tag(r.u8()?).ok_or_else(|| bad("unknown activation tag".into()))?;
            dims.push((fi, fo, act));
        }
        for w in dims.windows(2) {
            if w[0].1 != w[1].0 {
                return Err(bad("layer shapes do not chain".into()));
            }
        }
        if dims.last().unwrap().2 != Activation::Linear {
            return Err(bad("output layer must be linear".into()));
        }
        let mut layers = Vec::with_capacity(n);
        for &(fan_in, fan_out, activation) in &dims {
            let conv = |v: Vec<f32>| v.into_iter().map(|x| T::of(x as f64)).collect();
            let weights = conv(r.f32s(fan_in * fan_out)?);
            let bias = conv(r.f32s(fan_out)?);
            layers.push(Layer { weights, bias, fan_in, fan_out, activation });
        }
        let input_stats = get_stats(&mut r)?;
        let output_stats = get_stats(&mut r)?;
        let provenance = Provenance { seed: r.u64()?, epochs_trained: r.u32()?, corpus_digest: r.u64()? };
        if r.pos != b.len() {
            return Err(bad(format!("{} trailing bytes", b.len() - r.pos)));
        }
        let spec = LayerSpec {
            input_dim: dims[0].0,
            hidden: dims[..n - 1].iter().map(|&(_, w, a)| (w, a)).collect(),
            output_dim: dims[n - 1].1,
        };
        spec.validate()?;
        let net = Network { spec, layers, input_stats, output_stats, provenance };
        if !net.is_finite() {
            return Err(bad("non-finite parameter".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::signal::write_atomic_bytes(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
