//! LP residual and glottal closure instant detection.

use super::F0Track;
use crate::dsp::{lpc::lpc, window::hann};
use crate::signal::{FrameGrid, Waveform};

pub const LP_ORDER: usize = 24;
pub const PRE_EMPHASIS: f64 = 0.97;

/// Strictly increasing sample indices of glottal closures.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GciList {
    pub instants: Vec<usize>,
}

impl GciList {
    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }
}

/// Inverse-filtered residual of the pre-emphasised signal. Each 5 ms hop is
/// filtered with the order-24 LPC of the 25 ms Hann frame centred on it.
pub fn lp_residual(w: &Waveform) -> Vec<f64> {
    let n = w.len();
    let mut emph = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &x in &w.samples {
        emph.push(x - PRE_EMPHASIS * prev);
        prev = x;
    }
    let grid = match FrameGrid::for_len(n, w.sample_rate, 25.0) {
        Ok(g) => g,
        Err(_) => return emph,
    };
    let win = hann(grid.frame_len);
    let mut frame = Vec::new();
    let mut residual = vec![0.0; n];
    for i in 0..grid.n_frames {
        grid.extract(&emph, i, grid.frame_len, &mut frame);
        for (x, h) in frame.iter_mut().zip(&win) {
            *x *= h;
        }
        let a = lpc(&frame, LP_ORDER);
        let lo = grid.center(i).saturating_sub(grid.hop / 2);
        let hi = (grid.center(i) + grid.hop - grid.hop / 2).min(n);
        for t in lo..hi {
            let mut e = 0.0;
            for (k, &ak) in a.iter().enumerate() {
                if t >= k {
                    e += ak * emph[t - k];
                }
            }
            residual[t] = e;
        }
    }
    residual
}

fn argmin(x: &[f64], lo: usize, hi: usize) -> Option<usize> {
    (lo..hi).min_by(|&a, &b| x[a].total_cmp(&x[b]))
}

/// Places one closure per pitch period inside runs of anchored frames, at the
/// most negative residual sample of each expected period window.
pub fn detect_gci(w: &Waveform, f0: &F0Track) -> GciList {
    let residual = lp_residual(w);
    detect_gci_in_residual(&residual, w.sample_rate, f0)
}

pub(crate) fn detect_gci_in_residual(residual: &[f64], sample_rate: u32, f0: &F0Track) -> GciList {
    let n = residual.len();
    let hop = f0.hop;
    let sr = sample_rate as f64;
    let mut instants: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < f0.len() {
        if !f0.anchored[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < f0.len() && f0.anchored[j + 1] {
            j += 1;
        }
        let start = (i * hop).saturating_sub(hop / 2);
        let end = (j * hop + hop - hop / 2).min(n);
        // A run must hold at least two periods to be trusted.
        let period_at = |pos: usize| sr / f0.at_sample(pos as f64);
        if end > start && (end - start) as f64 >= 2.0 * period_at(start) {
            let first_end = (start + period_at(start).round() as usize).min(end);
            let mut g = match argmin(residual, start, first_end) {
                Some(g) => g,
                None => break,
            };
            if instants.last().map_or(true, |&last| g > last) {
                instants.push(g);
            }
            loop {
                let t = period_at(g);
                let lo = g + (0.7 * t).round() as usize;
                let hi = (g + (1.3 * t).round() as usize + 1).min(end);
                if lo >= hi {
                    break;
                }
                match argmin(residual, lo, hi) {
                    Some(next) => {
                        instants.push(next);
                        g = next;
                    }
                    None => break,
                }
            }
        }
        i = j + 1;
    }
    GciList { instants }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::{track_f0_continuous, F0Config};

    #[test]
    fn single_impulse_yields_at_most_one() {
        let mut s = vec![0.0; 8000];
        s[4000] = -0.9;
        let w = Waveform::new(s, 16_000).unwrap();
        let f0 = track_f0_continuous(&w, &F0Config::default()).unwrap();
        assert!(detect_gci(&w, &f0).len() <= 1);
    }

    #[test]
    fn residual_whitens_a_resonance() {
        // Periodic negative impulses through a two-pole resonance.
        let mut x = vec![0.0; 8000];
        for t in (100..8000).step_by(160) {
            x[t] = -1.0;
        }
        let (r, th) = (0.97f64, 2.0 * std::f64::consts::PI * 500.0 / 16_000.0);
        let (a1, a2) = (2.0 * r * th.cos(), -r * r);
        let mut y = vec![0.0; x.len()];
        for t in 0..x.len() {
            y[t] = x[t] + if t >= 1 { a1 * y[t - 1] } else { 0.0 } + if t >= 2 { a2 * y[t - 2] } else { 0.0 };
        }
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let w = Waveform::new(y.iter().map(|v| 0.5 * v / peak).collect(), 16_000).unwrap();
        let e = lp_residual(&w);
        // Largest negative residual near each impulse.
        let idx = argmin(&e, 2000, 2160).unwrap();
        assert!(idx.abs_diff(2020) <= 2, "{idx}");
    }
}
