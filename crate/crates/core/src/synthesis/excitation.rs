//! Voiced and noise excitation signals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{ExcitationNorm, OlaWindow, SynthesisConfig, UnvoicedEnvelope};
use super::filter::{crossover_gains, FrameFilter};
use crate::dsp::window::kaiser_at;
use crate::error::{Error, Result};
use crate::excitation::{F0Track, MvfTrack, ResidualPrototype};
use crate::signal::Waveform;

/// Excitation instants from integrating the instantaneous F0; the phase
/// starts at half a cycle so the first pulse is not clipped.
pub fn excitation_instants(f0: &F0Track, n_samples: usize, sample_rate: u32) -> Vec<f64> {
    let sr = sample_rate as f64;
    let mut instants = Vec::new();
    let mut phase = 0.5;
    for t in 0..n_samples {
        let step = f0.at_sample(t as f64) / sr;
        let next = phase + step;
        if next.floor() > phase.floor() {
            let frac = (next.floor() - phase) / step;
            instants.push(t as f64 + frac);
        }
        phase = next;
    }
    instants
}

const KERNEL_HALF_TAPS: f64 = 8.0;
const KERNEL_BETA: f64 = 8.0;

/// Band-limited reading of the prototype at fractional positions: a Kaiser
/// windowed sinc whose cutoff drops when the pulse is compressed.
struct PulseReader<'a> {
    pulse: &'a [f64],
    rho: f64,
    half: f64,
}

impl<'a> PulseReader<'a> {
    /// `step`: prototype samples per output sample.
    fn new(pulse: &'a [f64], step: f64) -> Self {
        let rho = (1.0 / step).min(1.0);
        Self { pulse, rho, half: KERNEL_HALF_TAPS / rho }
    }

    fn at(&self, x: f64) -> f64 {
        let lo = (x - self.half).ceil().max(0.0) as usize;
        let hi = ((x + self.half).floor() as isize).min(self.pulse.len() as isize - 1);
        let mut acc = 0.0;
        for j in lo as isize..=hi {
            let d = x - j as f64;
            let arg = std::f64::consts::PI * self.rho * d;
            let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
            acc += self.pulse[j as usize] * self.rho * sinc * kaiser_at(d, self.half, KERNEL_BETA);
        }
        acc
    }
}

/// Prototype stretched to two local periods, Hann-windowed and centred on
/// `center`; returns the samples from `first` onwards.
fn render_pulse(pulse: &[f64], center: f64, period: f64) -> (isize, Vec<f64>) {
    let first = (center - period).ceil() as isize;
    let last = (center + period).floor() as isize;
    let span = (pulse.len() - 1) as f64;
    let reader = PulseReader::new(pulse, span / (2.0 * period));
    let values = (first..=last)
        .map(|s| {
            let u = (s as f64 - center + period) / (2.0 * period);
            if (0.0..=1.0).contains(&u) {
                reader.at(u * span) * (std::f64::consts::PI * u).sin().powi(2)
            } else {
                0.0
            }
        })
        .collect();
    (first, values)
}

/// Pitch-synchronous overlap-add of the prototype pulse with unit power per
/// period.
pub fn build_voiced_excitation(f0: &F0Track, proto: &ResidualPrototype, n_samples: usize, sample_rate: u32) -> Result<Waveform> {
    build_voiced_excitation_with(f0, proto, n_samples, sample_rate, ExcitationNorm::PerPeriod)
}

pub fn build_voiced_excitation_with(
    f0: &F0Track,
    proto: &ResidualPrototype,
    n_samples: usize,
    sample_rate: u32,
    norm: ExcitationNorm,
) -> Result<Waveform> {
    if let Some(i) = f0.values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidArgument(format!("F0 at frame {i} is not positive")));
    }
    if proto.len() < 2 {
        return Err(Error::InvalidArgument("prototype needs at least two samples".into()));
    }
    let sr = sample_rate as f64;
    let mut out = vec![0.0; n_samples];
    if f0.is_empty() {
        return Waveform::new(out, sample_rate);
    }
    for c in excitation_instants(f0, n_samples, sample_rate) {
        let period = sr / f0.at_sample(c);
        let (first, values) = render_pulse(&proto.pulse, c, period);
        let gain = match norm {
            ExcitationNorm::PerPeriod => {
                let e: f64 = values.iter().map(|v| v * v).sum();
                if e > 0.0 { (period / e).sqrt() } else { 0.0 }
            }
            ExcitationNorm::PerFrame => 1.0,
        };
        for (k, v) in values.iter().enumerate() {
            let t = first + k as isize;
            if t >= 0 && (t as usize) < n_samples {
                out[t as usize] += gain * v;
            }
        }
    }
    if norm == ExcitationNorm::PerFrame {
        let hop = f0.hop.max(1);
        for chunk in out.chunks_mut(hop) {
            let ms = chunk.iter().map(|v| v * v).sum::<f64>() / chunk.len() as f64;
            if ms > 0.0 {
                let g = ms.sqrt().recip();
                chunk.iter_mut().for_each(|v| *v *= g);
            }
        }
    }
    Waveform::new(out, sample_rate)
}

/// Unit-variance Gaussian noise, fixed by `seed`.
pub fn white_noise(n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples).map(|_| rng.sample(StandardNormal)).collect()
}

/// Per-frame high-passed noise (cutoff at the frame MVF), overlap-added.
pub fn build_noise_excitation(mvf: &MvfTrack, n_samples: usize, cfg: &SynthesisConfig, seed: u64) -> Result<Waveform> {
    build_noise_excitation_shaped(mvf, None, n_samples, cfg, seed, crate::signal::WORKING_RATE)
}

/// As [`build_noise_excitation`]; `log_gains` (one per frame) drive the
/// amplitude-follow envelope and default to a flat trajectory.
pub fn build_noise_excitation_shaped(
    mvf: &MvfTrack,
    log_gains: Option<&[f64]>,
    n_samples: usize,
    cfg: &SynthesisConfig,
    seed: u64,
    sample_rate: u32,
) -> Result<Waveform> {
    let hop = mvf.hop;
    cfg.validate(hop)?;
    let noise = white_noise(n_samples, seed);
    let mut out = vec![0.0; n_samples];
    if mvf.is_empty() || n_samples == 0 {
        return Waveform::new(out, sample_rate);
    }
    let mut filter = FrameFilter::new(cfg.fft_len, hop);
    let hann = cfg.ola_window.coefficients(hop);
    let tri = OlaWindow::Triangular.coefficients(hop);
    let mut gains = vec![0.0; filter.bins()];
    let mut seg = vec![0.0; 2 * hop];
    let n_frames = mvf.len();
    for i in 0..=n_frames {
        let frame = i.min(n_frames - 1);
        let cutoff = mvf.values[frame];
        let unvoiced = cfg.is_unvoiced(cutoff);
        let start = (i * hop) as isize - hop as isize;
        let win = if unvoiced && cfg.unvoiced_envelope == UnvoicedEnvelope::Triangular { &tri } else { &hann };
        for (k, s) in seg.iter_mut().enumerate() {
            let t = start + k as isize;
            *s = if t >= 0 && (t as usize) < n_samples { noise[t as usize] * win[k] } else { 0.0 };
            if unvoiced && cfg.unvoiced_envelope == UnvoicedEnvelope::AmplitudeFollow {
                if let Some(lg) = log_gains {
                    *s *= (interp_log_gain(lg, t as f64 / hop as f64) - lg[frame]).exp();
                }
            }
        }
        crossover_gains(&mut gains, cutoff, cfg, sample_rate, filter.fft_len(), true);
        filter.apply(&seg, &gains, None, start, &mut out);
    }
    Waveform::new(out, sample_rate)
}

fn interp_log_gain(lg: &[f64], x: f64) -> f64 {
    if x <= 0.0 {
        return lg[0];
    }
    let i = x.floor() as usize;
    if i + 1 >= lg.len() {
        return lg[lg.len() - 1];
    }
    let t = x - i as f64;
    lg[i] * (1.0 - t) + lg[i + 1] * t
}
