//! Maximum voiced frequency estimation.
//!
//! For every frame the harmonics of the frame's F0 are scored by spectral
//! prominence: the mean power within `F0/4` of `k*F0` against the mean power
//! in the ring `F0/4 .. F0/2` around it, in dB, divided by a fixed range and
//! clipped to `[0, 1]`. The MVF is the last harmonic before a run of
//! consecutive harmonics scoring under the threshold.

use super::F0Track;
use crate::dsp::{window::hann, RealFft};
use crate::error::{Error, Result};
use crate::signal::{FrameGrid, Waveform};

#[derive(Clone, Debug, PartialEq)]
pub struct MvfConfig {
    pub mvf_floor: f64,
    pub fft_len: usize,
    pub prominence_threshold: f64,
    /// Peak-to-ring contrast (dB) that maps to prominence 1.
    pub prominence_range_db: f64,
    /// Consecutive weak harmonics that end the voiced band.
    pub run_length: usize,
    /// Window length in pitch periods, capped at `fft_len`.
    pub periods_per_window: f64,
    pub median_span: usize,
}

impl Default for MvfConfig {
    fn default() -> Self {
        Self {
            mvf_floor: 800.0,
            fft_len: 1024,
            prominence_threshold: 0.15,
            prominence_range_db: 40.0,
            run_length: 3,
            periods_per_window: 8.0,
            median_span: 5,
        }
    }
}

/// Per-frame maximum voiced frequency in Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct MvfTrack {
    pub values: Vec<f64>,
    pub hop: usize,
}

impl MvfTrack {
    pub fn new(values: Vec<f64>, hop: usize) -> Self {
        Self { values, hop }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Clamps every value into `[floor, nyquist]`, mapping non-finite values
    /// to the floor.
    pub fn clamp(&mut self, floor: f64, nyquist: f64) {
        for v in &mut self.values {
            *v = if v.is_finite() { v.clamp(floor, nyquist) } else { floor };
        }
    }
}

/// Prominence score of every harmonic of `f0` that fits below Nyquist.
pub(crate) fn harmonic_prominence(power: &[f64], f0: f64, sample_rate: f64, fft_len: usize, range_db: f64) -> Vec<f64> {
    let bin_hz = sample_rate / fft_len as f64;
    let nyquist = sample_rate / 2.0;
    let mut out = Vec::new();
    let mut k = 1;
    while k as f64 * f0 + f0 / 2.0 <= nyquist {
        let centre = k as f64 * f0;
        let lo = ((centre - f0 / 2.0) / bin_hz).ceil().max(0.0) as usize;
        let hi = (((centre + f0 / 2.0) / bin_hz).floor() as usize).min(power.len() - 1);
        let (mut peak, mut np, mut ring, mut nr) = (0.0, 0usize, 0.0, 0usize);
        for (b, &p) in power.iter().enumerate().take(hi + 1).skip(lo) {
            let d = (b as f64 * bin_hz - centre).abs();
            if d <= f0 / 4.0 {
                peak += p;
                np += 1;
            } else {
                ring += p;
                nr += 1;
            }
        }
        let score = if np == 0 || nr == 0 {
            0.0
        } else {
            let contrast = 10.0 * ((peak / np as f64 + 1e-30) / (ring / nr as f64 + 1e-30)).log10();
            (contrast / range_db).clamp(0.0, 1.0)
        };
        out.push(score);
        k += 1;
    }
    out
}

/// Applies the run rule to harmonic scores; `None` means every harmonic up
/// to Nyquist is voiced.
pub(crate) fn voiced_band_edge(scores: &[f64], f0: f64, threshold: f64, run: usize) -> Option<f64> {
    let mut weak = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < threshold {
            weak += 1;
            if weak == run {
                let first_weak = i + 1 - run; // zero-based index of harmonic k = first_weak + 1
                return Some(first_weak as f64 * f0);
            }
        } else {
            weak = 0;
        }
    }
    if weak > 0 {
        // Trailing weak harmonics at the top of the band.
        Some((scores.len() - weak) as f64 * f0)
    } else {
        None
    }
}

fn median_filter(x: &[f64], span: usize) -> Vec<f64> {
    let half = span / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            let mut w: Vec<f64> = x[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            w[w.len() / 2]
        })
        .collect()
}

/// Estimates the MVF track of `w` given its continuous F0 track.
pub fn estimate_mvf(w: &Waveform, f0: &F0Track, cfg: &MvfConfig) -> Result<MvfTrack> {
    let grid = FrameGrid::for_len(w.len(), w.sample_rate, 25.0)?;
    if f0.len() != grid.n_frames || f0.hop != grid.hop {
        return Err(Error::GridMismatch { expected: grid.n_frames, found: f0.len() });
    }
    let sr = w.sample_rate as f64;
    let nyquist = sr / 2.0;
    let mut fft = RealFft::new(cfg.fft_len);
    let mut frame = Vec::new();
    let mut power = Vec::new();
    let mut windows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut raw = Vec::with_capacity(grid.n_frames);
    for i in 0..grid.n_frames {
        let f = f0.values[i];
        let len = ((cfg.periods_per_window * sr / f).round() as usize).clamp(64, cfg.fft_len);
        let win = match windows.iter().position(|(l, _)| *l == len) {
            Some(p) => &windows[p].1,
            None => {
                windows.push((len, hann(len)));
                &windows.last().unwrap().1
            }
        };
        grid.extract(&w.samples, i, len, &mut frame);
        for (x, h) in frame.iter_mut().zip(win) {
            *x *= h;
        }
        fft.power(&frame, &mut power);
        let scores = harmonic_prominence(&power, f, sr, cfg.fft_len, cfg.prominence_range_db);
        let edge = voiced_band_edge(&scores, f, cfg.prominence_threshold, cfg.run_length).unwrap_or(nyquist);
        raw.push(edge);
    }
    let mut track = MvfTrack::new(median_filter(&raw, cfg.median_span.max(1)), grid.hop);
    track.clamp(cfg.mvf_floor, nyquist);
    Ok(track)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_rule() {
        let s = [0.9, 0.8, 0.9, 0.1, 0.0, 0.05, 0.9];
        assert_eq!(voiced_band_edge(&s, 100.0, 0.15, 3), Some(300.0));
        assert_eq!(voiced_band_edge(&[0.9, 0.1, 0.9, 0.9], 100.0, 0.15, 3), None);
        assert_eq!(voiced_band_edge(&[0.9, 0.9, 0.1], 100.0, 0.15, 3), Some(200.0));
        assert_eq!(voiced_band_edge(&[0.0, 0.0, 0.0], 100.0, 0.15, 3), Some(0.0));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let w = Waveform::new(vec![0.0; 1600], 16_000).unwrap();
        let f0 = F0Track::new(vec![100.0; 7], 80);
        assert!(matches!(estimate_mvf(&w, &f0, &MvfConfig::default()), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn median_filter_removes_single_outliers() {
        let x = [1.0, 1.0, 9.0, 1.0, 1.0];
        assert_eq!(median_filter(&x, 5), vec![1.0; 5]);
    }
}
