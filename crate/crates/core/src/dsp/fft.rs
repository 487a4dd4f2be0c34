use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

pub use rustfft::num_complex::Complex64 as Complex;

/// Fixed-length FFT for real input, backed by a complex transform.
///
/// Holds its own scratch buffers, so one instance per thread.
pub struct RealFft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex>,
    scratch: Vec<Complex>,
}

impl std::fmt::Debug for RealFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFft").field("len", &self.len).finish()
    }
}

impl Clone for RealFft {
    fn clone(&self) -> Self {
        Self::new(self.len)
    }
}

impl RealFft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            len,
            forward,
            inverse,
            buf: vec![Complex::new(0.0, 0.0); len],
            scratch: vec![Complex::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bins(&self) -> usize {
        self.len / 2 + 1
    }

    /// Forward transform of `input` (zero-padded or truncated to the FFT
    /// length); writes the `len/2 + 1` non-negative-frequency bins.
    pub fn forward(&mut self, input: &[f64], out: &mut Vec<Complex>) {
        for (i, slot) in self.buf.iter_mut().enumerate() {
            *slot = Complex::new(input.get(i).copied().unwrap_or(0.0), 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        out.clear();
        out.extend_from_slice(&self.buf[..self.bins()]);
    }

    /// Power spectrum `|X(k)|^2` of the zero-padded input.
    pub fn power(&mut self, input: &[f64], out: &mut Vec<f64>) {
        for (i, slot) in self.buf.iter_mut().enumerate() {
            *slot = Complex::new(input.get(i).copied().unwrap_or(0.0), 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        out.clear();
        out.extend(self.buf[..self.bins()].iter().map(|c| c.norm_sqr()));
    }

    /// Inverse of a Hermitian spectrum given by its `len/2 + 1` bins,
    /// scaled by `1/len`.
    pub fn inverse(&mut self, half: &[Complex], out: &mut Vec<f64>) {
        let n = self.len;
        assert_eq!(half.len(), self.bins());
        self.buf[..half.len()].copy_from_slice(half);
        for k in half.len()..n {
            self.buf[k] = half[n - k].conj();
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        out.clear();
        out.extend(self.buf.iter().map(|c| c.re * scale));
    }
}
