//! Frame-wise frequency-domain filtering with overlap-add.

use super::config::SynthesisConfig;
use crate::dsp::{Complex, RealFft};

/// Overlap-add filter for `2 * hop` segments. Segments sit a quarter of the
/// FFT length into the buffer, leaving room for the non-causal ringing of
/// zero-phase gains before them and causal envelope tails after them.
pub struct FrameFilter {
    fft: RealFft,
    offset: usize,
    seg_len: usize,
    time: Vec<f64>,
    spec: Vec<Complex>,
}

impl FrameFilter {
    pub fn new(fft_len: usize, hop: usize) -> Self {
        assert!(fft_len >= 2 * hop);
        let offset = ((fft_len - 2 * hop) / 4).min(fft_len / 4);
        Self { fft: RealFft::new(fft_len), offset, seg_len: 2 * hop, time: vec![0.0; fft_len], spec: Vec::new() }
    }

    pub fn fft_len(&self) -> usize {
        self.fft.len()
    }

    pub fn bins(&self) -> usize {
        self.fft.bins()
    }

    /// Spectrum of a segment in the buffer layout.
    pub fn analyze(&mut self, seg: &[f64], out: &mut Vec<Complex>) {
        debug_assert_eq!(seg.len(), self.seg_len);
        self.time.iter_mut().for_each(|v| *v = 0.0);
        self.time[self.offset..self.offset + seg.len()].copy_from_slice(seg);
        self.fft.forward(&self.time, out);
    }

    /// Inverse transform of `spec`, added into `out` for a segment that
    /// started at sample `start`.
    pub fn accumulate(&mut self, spec: &[Complex], start: isize, out: &mut [f64]) {
        self.fft.inverse(spec, &mut self.time);
        let base = start - self.offset as isize;
        for (b, v) in self.time.iter().enumerate() {
            let t = base + b as isize;
            if t >= 0 && (t as usize) < out.len() {
                out[t as usize] += v;
            }
        }
    }

    /// Filters one segment by real `gains` and an optional complex response.
    pub fn apply(&mut self, seg: &[f64], gains: &[f64], response: Option<&[Complex]>, start: isize, out: &mut [f64]) {
        let mut spec = std::mem::take(&mut self.spec);
        self.analyze(seg, &mut spec);
        for (k, s) in spec.iter_mut().enumerate() {
            *s *= gains[k];
            if let Some(r) = response {
                *s *= r[k];
            }
        }
        self.accumulate(&spec, start, out);
        self.spec = spec;
    }
}

/// Power-complementary MVF split: the low-pass passes everything up to the
/// MVF and falls along a quarter cosine (in log frequency) over the
/// transition band above it; the high-pass is its complement. Unvoiced
/// frames are all noise. Writes the high-pass gains if `high`, else low-pass.
pub fn crossover_gains(out: &mut [f64], mvf: f64, cfg: &SynthesisConfig, sample_rate: u32, fft_len: usize, high: bool) {
    let unvoiced = cfg.is_unvoiced(mvf);
    let width = cfg.transition_octaves();
    for (k, g) in out.iter_mut().enumerate() {
        let f = k as f64 * sample_rate as f64 / fft_len as f64;
        let theta = if unvoiced {
            std::f64::consts::FRAC_PI_2
        } else if f <= mvf {
            0.0
        } else {
            ((f / mvf).log2() / width).min(1.0) * std::f64::consts::FRAC_PI_2
        };
        *g = if high { theta.sin() } else { theta.cos() };
    }
}

/// Minimum-phase response from a log-amplitude envelope by cepstral folding.
pub struct MinimumPhase {
    fft: RealFft,
    half: Vec<Complex>,
    cep: Vec<f64>,
}

impl MinimumPhase {
    pub fn new(fft_len: usize) -> Self {
        Self { fft: RealFft::new(fft_len), half: Vec::new(), cep: Vec::new() }
    }

    /// `log_amp` holds `fft_len/2 + 1` natural-log amplitudes.
    pub fn response(&mut self, log_amp: &[f64], scale: f64, out: &mut Vec<Complex>) {
        let n = self.fft.len();
        self.half.clear();
        self.half.extend(log_amp.iter().map(|&v| Complex::new(v, 0.0)));
        self.fft.inverse(&self.half, &mut self.cep);
        for k in 1..n / 2 {
            self.cep[k] *= 2.0;
        }
        for v in &mut self.cep[n / 2 + 1..] {
            *v = 0.0;
        }
        self.fft.forward(&self.cep, out);
        for c in out.iter_mut() {
            *c = c.exp() * scale;
        }
    }
}
