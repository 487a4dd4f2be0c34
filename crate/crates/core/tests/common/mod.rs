//! Deterministic synthetic test signals.
#![allow(dead_code)]

use std::f64::consts::PI;

use contvoc::dsp::{Complex, RealFft};
use contvoc::Waveform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const SR: u32 = 16_000;

pub fn wave(samples: Vec<f64>) -> Waveform {
    Waveform::new(samples, SR).unwrap()
}

pub fn sawtooth_at(rate: u32, f0: f64, secs: f64) -> Waveform {
    let n = (secs * rate as f64) as usize;
    let samples = (0..n)
        .map(|i| {
            let phase = (f0 * i as f64 / rate as f64).fract();
            0.5 * (2.0 * phase - 1.0)
        })
        .collect();
    Waveform::new(samples, rate).unwrap()
}

pub fn white_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Zero-phase brick-wall filter applied to the whole buffer through one FFT;
/// keeps bins whose frequency satisfies `keep`.
pub fn brickwall(x: &[f64], keep: impl Fn(f64) -> bool) -> Vec<f64> {
    let n = x.len().next_power_of_two();
    let mut fft = RealFft::new(n);
    let mut spec: Vec<Complex> = Vec::new();
    fft.forward(x, &mut spec);
    for (k, c) in spec.iter_mut().enumerate() {
        if !keep(k as f64 * SR as f64 / n as f64) {
            *c = Complex::new(0.0, 0.0);
        }
    }
    let mut out = Vec::new();
    fft.inverse(&spec, &mut out);
    out.truncate(x.len());
    out
}

/// Harmonics of `f0` with amplitude `amp` up to `cutoff`, plus white noise
/// above the cutoff whose FFT bin level sits `noise_db_below` under the
/// harmonic peaks (1024-point Hann analysis).
pub fn harmonic_plus_noise(f0: f64, cutoff: f64, amp: f64, noise_db_below: f64, secs: f64, seed: u64) -> Waveform {
    let n = (secs * SR as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut k = 1;
    while k as f64 * f0 <= cutoff {
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let f = k as f64 * f0;
        for (i, v) in x.iter_mut().enumerate() {
            *v += amp * (2.0 * PI * f * i as f64 / SR as f64 + phase).sin();
        }
        k += 1;
    }
    if cutoff < SR as f64 / 2.0 {
        // Peak bin power of a sinusoid: (amp/2 * sum w)^2 with sum w = 512;
        // noise bin power: sigma^2 * sum w^2 with sum w^2 = 384.
        let peak = (amp / 2.0 * 512.0).powi(2);
        let sigma = (peak * 10f64.powf(-noise_db_below / 10.0) / 384.0).sqrt();
        let noise = brickwall(&white_noise(n, sigma, seed ^ 0xABCD), |f| f > cutoff);
        for (v, e) in x.iter_mut().zip(noise) {
            *v += e;
        }
    }
    wave(x)
}

/// Periodic negative impulses filtered by a two-pole resonance. Returns the
/// waveform and the impulse positions.
pub fn resonant_impulse_train(period: usize, secs: f64, resonance_hz: f64) -> (Waveform, Vec<usize>) {
    let n = (secs * SR as f64) as usize;
    let mut x = vec![0.0; n];
    let truth: Vec<usize> = (period / 2..n).step_by(period).collect();
    for &t in &truth {
        x[t] = -1.0;
    }
    let r = 0.95f64;
    let th = 2.0 * PI * resonance_hz / SR as f64;
    let (a1, a2) = (2.0 * r * th.cos(), -r * r);
    let mut y = vec![0.0; n];
    for t in 0..n {
        y[t] = x[t] + if t >= 1 { a1 * y[t - 1] } else { 0.0 } + if t >= 2 { a2 * y[t - 2] } else { 0.0 };
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (wave(y.iter().map(|v| 0.8 * v / peak).collect()), truth)
}

/// Fraction of values satisfying `pred`.
pub fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}
