//! Mel-generalized cepstral analysis and envelope reconstruction.
//!
//! Frames are stored gain-normalised: element 0 is `ln K` and elements
//! `1..=order` are the normalised generalized cepstrum `c'`, so the model is
//! `|H(w)| = K |1 + gamma * sum_m c'_m e^{-j m W(w)}|^(1/gamma)` with `W` the
//! warped frequency (and `K exp(Re sum ...)` for gamma = 0).

use super::transform::{gc2gc, unwarp, warp};
use super::MgcTrack;
use crate::dsp::{linalg::cholesky_solve, window::hann, Complex, RealFft};
use crate::error::{Error, Result};
use crate::signal::{FrameGrid, Waveform};

pub const MGC_ORDER: usize = 24;
pub const MGC_ALPHA: f64 = 0.42;
pub const MGC_GAMMA: f64 = -1.0 / 3.0;
pub const ANALYSIS_FFT_LEN: usize = 1024;
pub const POWER_FLOOR: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 30;
pub const CONVERGENCE: f64 = 1e-6;

const LOG_AMP_LIMIT: f64 = 700.0;

fn check_params(alpha: f64, gamma: f64, order: usize) -> Result<()> {
    if !(-1.0..=0.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [-1, 0]")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1)")));
    }
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    Ok(())
}

/// Per-frame analyser with precomputed warped-axis tables.
pub struct MgcAnalyzer {
    alpha: f64,
    gamma: f64,
    order: usize,
    fft: RealFft,
    /// Fractional linear-frequency bin read for each uniform warped bin.
    positions: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    weights: Vec<f64>,
    power: Vec<f64>,
    target: Vec<f64>,
    cep: Vec<f64>,
    half: Vec<Complex>,
}

impl MgcAnalyzer {
    pub fn new(alpha: f64, gamma: f64, order: usize) -> Result<Self> {
        check_params(alpha, gamma, order)?;
        let n = ANALYSIS_FFT_LEN;
        let bins = n / 2 + 1;
        let mut positions = Vec::with_capacity(bins);
        let mut cos = Vec::with_capacity(bins * (order + 1));
        let mut sin = Vec::with_capacity(bins * (order + 1));
        for j in 0..bins {
            let big = std::f64::consts::PI * j as f64 / (bins - 1) as f64;
            let w = unwarp(big, alpha).clamp(0.0, std::f64::consts::PI);
            positions.push(w / std::f64::consts::PI * (bins - 1) as f64);
            for m in 0..=order {
                let (s, c) = (m as f64 * big).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        let mut weights = vec![1.0; bins];
        weights[0] = 0.5;
        weights[bins - 1] = 0.5;
        Ok(Self {
            alpha,
            gamma,
            order,
            fft: RealFft::new(n),
            positions,
            cos,
            sin,
            weights,
            power: Vec::new(),
            target: vec![0.0; bins],
            cep: Vec::new(),
            half: vec![Complex::new(0.0, 0.0); bins],
        })
    }

    /// Analyses one already-windowed frame. Returns the coefficients and
    /// whether the generalized fit fell back to the gamma = 0 solution.
    pub fn analyze_frame(&mut self, windowed: &[f64]) -> (Vec<f64>, bool) {
        self.fft.power(windowed, &mut self.power);
        let bins = self.power.len();
        // Log amplitude on the uniform warped grid.
        for j in 0..bins {
            let pos = self.positions[j];
            let k = (pos.floor() as usize).min(bins - 2);
            let frac = pos - k as f64;
            let la = |p: f64| 0.5 * p.max(POWER_FLOOR).ln();
            self.target[j] = (1.0 - frac) * la(self.power[k]) + frac * la(self.power[k + 1]);
        }
        let c0 = self.cepstral_fit();
        if self.gamma == 0.0 {
            return (c0, false);
        }
        match self.generalized_fit(&c0) {
            Some(c) => (c, false),
            None => {
                let mut norm = c0.clone();
                norm[0] = 0.0;
                let mut c = gc2gc(&norm, 0.0, self.gamma, self.order);
                c[0] = c0[0];
                (c, true)
            }
        }
    }

    /// Least-squares cosine fit of the warped log amplitude (gamma = 0),
    /// in closed form through the symmetric inverse FFT.
    fn cepstral_fit(&mut self) -> Vec<f64> {
        for (h, &t) in self.half.iter_mut().zip(&self.target) {
            *h = Complex::new(t, 0.0);
        }
        self.fft.inverse(&self.half, &mut self.cep);
        let mut c = Vec::with_capacity(self.order + 1);
        c.push(self.cep[0]);
        c.extend(self.cep[1..=self.order].iter().map(|v| 2.0 * v));
        c
    }

    /// Gauss-Newton least-squares fit of the generalized model's log
    /// amplitude, starting from the converted gamma = 0 solution. `None`
    /// when it fails to converge.
    fn generalized_fit(&self, c_log: &[f64]) -> Option<Vec<f64>> {
        let g = self.gamma;
        let m1 = self.order + 1;
        let ln_k = c_log[0];
        let target: Vec<f64> = self.target.iter().map(|&y| y - ln_k).collect();
        let mut start = c_log.to_vec();
        start[0] = 0.0;
        let mut c = gc2gc(&start, 0.0, g, self.order);

        let residuals = |c: &[f64], r: &mut Vec<f64>, z: &mut Vec<(f64, f64, f64)>| -> f64 {
            r.clear();
            z.clear();
            let mut cost = 0.0;
            for j in 0..target.len() {
                let row = j * m1;
                let (mut re, mut im) = (0.0, 0.0);
                for m in 0..m1 {
                    re += c[m] * self.cos[row + m];
                    im -= c[m] * self.sin[row + m];
                }
                let zr = 1.0 + g * re;
                let zi = g * im;
                let mag = zr.hypot(zi).max(1e-12);
                let e = mag.ln() / g - target[j];
                cost += self.weights[j] * e * e;
                r.push(e);
                z.push((zr, zi, mag));
            }
            cost
        };

        let mut r = Vec::new();
        let mut z = Vec::new();
        let mut cost = residuals(&c, &mut r, &mut z);
        let mut converged = false;
        let mut a = vec![0.0; m1 * m1];
        let mut b = vec![0.0; m1];
        let mut jrow = vec![0.0; m1];
        let mut trial_r = Vec::new();
        let mut trial_z = Vec::new();
        for _ in 0..MAX_ITERATIONS {
            if !cost.is_finite() {
                return None;
            }
            if cost < 1e-20 {
                converged = true;
                break;
            }
            a.iter_mut().for_each(|v| *v = 0.0);
            b.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..target.len() {
                let row = j * m1;
                let (zr, zi, mag) = z[j];
                let w = self.weights[j];
                for m in 0..m1 {
                    jrow[m] = (zr * self.cos[row + m] - zi * self.sin[row + m]) / (mag * mag);
                }
                for p in 0..m1 {
                    let wp = w * jrow[p];
                    b[p] -= wp * r[j];
                    for q in p..m1 {
                        a[p * m1 + q] += wp * jrow[q];
                    }
                }
            }
            for p in 0..m1 {
                a[p * m1 + p] *= 1.0 + 1e-12;
                for q in 0..p {
                    a[p * m1 + q] = a[q * m1 + p];
                }
            }
            let step = cholesky_solve(&a, &b, m1)?;
            let mut scale = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                let trial: Vec<f64> = c.iter().zip(&step).map(|(x, d)| x + scale * d).collect();
                let trial_cost = residuals(&trial, &mut trial_r, &mut trial_z);
                if trial_cost.is_finite() && trial_cost <= cost {
                    let gain = (cost - trial_cost) / cost;
                    c = trial;
                    cost = trial_cost;
                    std::mem::swap(&mut r, &mut trial_r);
                    std::mem::swap(&mut z, &mut trial_z);
                    improved = true;
                    if gain < CONVERGENCE {
                        converged = true;
                    }
                    break;
                }
                scale *= 0.5;
            }
            if !improved {
                converged = true;
            }
            if converged {
                break;
            }
        }
        if !converged {
            return None;
        }
        // Fold c'_0 into the gain.
        let k = 1.0 + g * c[0];
        if !(k > 0.0) {
            return None;
        }
        let mut out = Vec::with_capacity(m1);
        out.push(ln_k + k.ln() / g);
        out.extend(c[1..].iter().map(|v| v / k));
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// MGC analysis of every frame of `grid` (Hann window of `grid.frame_len`).
pub fn mgc_analyze(w: &Waveform, grid: &FrameGrid, alpha: f64, gamma: f64, order: usize) -> Result<MgcTrack> {
    let mut an = MgcAnalyzer::new(alpha, gamma, order)?;
    let win = hann(grid.frame_len);
    let mut track = MgcTrack::new(order, alpha, gamma, grid.hop, grid.sample_rate);
    let mut frame = Vec::new();
    for i in 0..grid.n_frames {
        grid.extract(&w.samples, i, grid.frame_len, &mut frame);
        for (x, h) in frame.iter_mut().zip(&win) {
            *x *= h;
        }
        let (c, fell_back) = an.analyze_frame(&frame);
        track.push_frame(&c);
        if fell_back {
            track.fallback_frames += 1;
        }
    }
    if track.fallback_frames > 0 {
        log::warn!("{} of {} frames fell back to the gamma = 0 solution", track.fallback_frames, grid.n_frames);
    }
    Ok(track)
}

/// Natural-log amplitude of the envelope on `fft_len/2 + 1` linear bins.
pub fn mgc_to_log_spectrum(frame: &[f64], fft_len: usize, alpha: f64, gamma: f64) -> Vec<f64> {
    assert!(fft_len >= 256 && fft_len.is_power_of_two(), "fft_len must be a power of two >= 256");
    let bins = fft_len / 2 + 1;
    let ln_k = frame.first().copied().unwrap_or(0.0);
    (0..bins)
        .map(|k| {
            let big = warp(std::f64::consts::PI * k as f64 / (bins - 1) as f64, alpha);
            let (mut re, mut im) = (0.0, 0.0);
            for (m, &c) in frame.iter().enumerate().skip(1) {
                let (s, co) = (m as f64 * big).sin_cos();
                re += c * co;
                im -= c * s;
            }
            let v = if gamma == 0.0 {
                ln_k + re
            } else {
                let mag = (1.0 + gamma * re).hypot(gamma * im).max(1e-300);
                ln_k + mag.ln() / gamma
            };
            if v.is_nan() { -LOG_AMP_LIMIT } else { v.clamp(-LOG_AMP_LIMIT, LOG_AMP_LIMIT) }
        })
        .collect()
}

/// Strictly positive, finite amplitude envelope on `fft_len/2 + 1` bins.
pub fn mgc_to_spectrum(frame: &[f64], fft_len: usize, alpha: f64, gamma: f64) -> Vec<f64> {
    mgc_to_log_spectrum(frame, fft_len, alpha, gamma).into_iter().map(f64::exp).collect()
}
