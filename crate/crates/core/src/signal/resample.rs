//! Polyphase windowed-sinc sample-rate conversion.

use std::f64::consts::PI;

use super::Waveform;
use crate::dsp::window::kaiser_at;

const KAISER_BETA: f64 = 8.0;
/// Taps per output phase, measured at the lower of the two rates.
const TAPS_PER_PHASE: usize = 64;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.94;
/// Largest interpolation factor for which the phase table is precomputed.
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rational `up/down` resampler with a Kaiser-windowed sinc kernel.
#[derive(Clone, Debug)]
pub struct Resampler {
    up: u64,
    down: u64,
    /// Kernel half-width in input samples.
    half_width: f64,
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    reach: usize,
    table: Option<Vec<f64>>,
}

impl Resampler {
    pub fn new(from_rate: u32, to_rate: u32) -> Self {
        assert!(from_rate > 0 && to_rate > 0, "sample rates must be positive");
        let g = gcd(from_rate as u64, to_rate as u64);
        let up = to_rate as u64 / g;
        let down = from_rate as u64 / g;
        let ratio = (up as f64 / down as f64).min(1.0);
        let half_width = (TAPS_PER_PHASE / 2) as f64 / ratio;
        let cutoff = 0.5 * ratio * ROLLOFF;
        let reach = half_width.ceil() as usize;
        let mut r = Self { up, down, half_width, cutoff, reach, table: None };
        if up <= MAX_TABLE_PHASES {
            let mut table = Vec::with_capacity(up as usize * 2 * reach);
            for phase in 0..up {
                let frac = phase as f64 / up as f64;
                for j in 0..2 * reach {
                    // tap j reads input index base + 1 - reach + j
                    let tau = frac + reach as f64 - 1.0 - j as f64;
                    table.push(r.kernel(tau));
                }
            }
            r.table = Some(table);
        }
        r
    }

    fn kernel(&self, tau: f64) -> f64 {
        let x = 2.0 * self.cutoff * tau;
        let sinc = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
        2.0 * self.cutoff * sinc * kaiser_at(tau, self.half_width, KAISER_BETA)
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len as u64 * self.up).div_ceil(self.down) as usize
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let n_out = self.output_len(input.len());
        let reach = self.reach as i64;
        let mut out = Vec::with_capacity(n_out);
        for n in 0..n_out as u64 {
            let pos = n * self.down;
            let base = (pos / self.up) as i64;
            let phase = pos % self.up;
            let first = base + 1 - reach;
            let mut acc = 0.0;
            match &self.table {
                Some(table) => {
                    let row = &table[phase as usize * 2 * self.reach..(phase as usize + 1) * 2 * self.reach];
                    for (j, &h) in row.iter().enumerate() {
                        let idx = first + j as i64;
                        if idx >= 0 && (idx as usize) < input.len() {
                            acc += input[idx as usize] * h;
                        }
                    }
                }
                None => {
                    let frac = phase as f64 / self.up as f64;
                    for j in 0..2 * reach {
                        let idx = first + j;
                        if idx >= 0 && (idx as usize) < input.len() {
                            let tau = frac + (reach - 1 - j) as f64;
                            acc += input[idx as usize] * self.kernel(tau);
                        }
                    }
                }
            }
            out.push(acc);
        }
        out
    }
}

/// Band-limited conversion of `w` to `target_rate`.
pub fn resample(w: &Waveform, target_rate: u32) -> Waveform {
    assert!(target_rate > 0, "target rate must be positive");
    if w.sample_rate == target_rate {
        return w.clone();
    }
    let samples = Resampler::new(w.sample_rate, target_rate).process(&w.samples);
    Waveform { samples, sample_rate: target_rate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{window::hann, RealFft};

    fn tone(freq: f64, rate: u32, secs: f64) -> Waveform {
        let n = (secs * rate as f64) as usize;
        Waveform {
            samples: (0..n).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin()).collect(),
            sample_rate: rate,
        }
    }

    /// Hann-windowed power spectrum of the central 8192 samples.
    fn spectrum(w: &Waveform) -> Vec<f64> {
        let n = 8192;
        let start = (w.len() - n) / 2;
        let win = hann(n);
        let x: Vec<f64> = (0..n).map(|i| w.samples[start + i] * win[i]).collect();
        let mut p = Vec::new();
        RealFft::new(n).power(&x, &mut p);
        p
    }

    fn argmax(p: &[f64]) -> usize {
        p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
    }

    #[test]
    fn identity_rate_is_unchanged() {
        let w = tone(440.0, 16_000, 0.1);
        assert_eq!(resample(&w, 16_000), w);
    }

    #[test]
    fn tone_frequency_is_preserved() {
        for &src in &[22_050u32, 44_100, 48_000, 8_000] {
            let w = resample(&tone(1000.0, src, 1.0), 16_000);
            let expect = (src as f64 * 1.0 * 16_000.0 / src as f64).round();
            assert!((w.len() as f64 - expect).abs() <= 1.0, "{src}: len {}", w.len());
            let bin = argmax(&spectrum(&w)) as f64;
            let want = 1000.0 / 16_000.0 * 8192.0;
            assert!((bin - want).abs() <= 1.0, "{src}: bin {bin} vs {want}");
        }
    }

    #[test]
    fn near_nyquist_tone_has_no_alias_energy() {
        let w = resample(&tone(7_900.0, 48_000, 1.0), 16_000);
        let p = spectrum(&w);
        let peak = argmax(&p);
        let peak_energy: f64 = p[peak.saturating_sub(4)..(peak + 5).min(p.len())].iter().sum();
        let rest: f64 = p.iter().enumerate().filter(|(k, _)| k.abs_diff(peak) > 4).map(|(_, v)| v).sum();
        assert!(10.0 * (peak_energy / rest).log10() >= 40.0);
    }

    #[test]
    fn large_phase_count_uses_direct_kernel() {
        let r = Resampler::new(16_001, 16_000);
        assert!(r.table.is_none());
        let w = tone(500.0, 16_001, 0.6);
        let out = resample(&w, 16_000);
        let bin = argmax(&spectrum(&out)) as f64;
        assert!((bin - 500.0 / 16_000.0 * 8192.0).abs() <= 1.0);
    }
}
