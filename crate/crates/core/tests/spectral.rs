mod common;

use std::f64::consts::PI;

use common::*;
use contvoc::dsp::{window::hann, Complex, RealFft};
use contvoc::signal::frame_grid;
use contvoc::spectral::*;
use proptest::prelude::*;

fn analyze(w: &contvoc::Waveform, alpha: f64, gamma: f64) -> MgcTrack {
    let grid = frame_grid(w, 25.0).unwrap();
    mgc_analyze(w, &grid, alpha, gamma, MGC_ORDER).unwrap()
}

/// Impulse placed at the centre of frame `frame`, filtered by the all-pole
/// polynomial `a` (a[0] = 1).
fn all_pole_impulse(a: &[f64], n: usize, at: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for t in at..n {
        let mut v = if t == at { 1.0 } else { 0.0 };
        for (k, &ak) in a.iter().enumerate().skip(1) {
            if t >= at + k {
                v -= ak * y[t - k];
            }
        }
        y[t] = v;
    }
    y
}

/// Closed-form all-pole amplitude response in dB at normalised frequency w.
fn all_pole_db(a: &[f64], w: f64) -> f64 {
    let z: Complex = a.iter().enumerate().map(|(k, &ak)| Complex::from_polar(ak, -(k as f64) * w)).sum();
    -20.0 * z.norm().log10()
}

fn ar2() -> [f64; 3] {
    let (r, th) = (0.95f64, 0.3 * PI);
    [1.0, -2.0 * r * th.cos(), r * r]
}

fn mean_abs_db(est: &[f64], truth: impl Fn(f64) -> f64, max_hz: f64) -> f64 {
    let bins = est.len();
    let n = 2 * (bins - 1);
    let ks: Vec<usize> = (0..bins).filter(|&k| k as f64 * SR as f64 / n as f64 <= max_hz).collect();
    ks.iter()
        .map(|&k| (20.0 * est[k].log10() - truth(2.0 * PI * k as f64 / n as f64)).abs())
        .sum::<f64>()
        / ks.len() as f64
}

#[test]
fn unit_impulse_frame_is_flat() {
    let mut x = vec![0.0; 1600];
    x[800] = 1.0;
    let t = analyze(&wave(x), MGC_ALPHA, MGC_GAMMA);
    for f in t.frames() {
        let tail: f64 = f[1..].iter().map(|c| c * c).sum();
        assert!(tail <= 1e-6, "{tail}");
    }
    assert_eq!(t.fallback_frames, 0);
}

#[test]
fn unwarped_log_fit_equals_truncated_real_cepstrum() {
    let w = harmonic_plus_noise(130.0, 3000.0, 0.05, 20.0, 0.3, 9);
    let t = analyze(&w, 0.0, 0.0);
    let grid = frame_grid(&w, 25.0).unwrap();
    let win = hann(grid.frame_len);
    let mut fft = RealFft::new(1024);
    let (mut frame, mut power, mut cep) = (Vec::new(), Vec::new(), Vec::new());
    for i in (0..grid.n_frames).step_by(7) {
        grid.extract(&w.samples, i, grid.frame_len, &mut frame);
        let windowed: Vec<f64> = frame.iter().zip(&win).map(|(x, h)| x * h).collect();
        fft.power(&windowed, &mut power);
        let logp: Vec<Complex> = power.iter().map(|p| Complex::new(p.max(1e-10).ln(), 0.0)).collect();
        fft.inverse(&logp, &mut cep);
        // Cepstrum of the power periodogram, folded to a minimum-phase
        // amplitude cepstrum: c0 halves, higher terms carry over.
        let got = t.frame(i);
        assert!((got[0] - cep[0] / 2.0).abs() <= 1e-6);
        for m in 1..=MGC_ORDER {
            assert!((got[m] - cep[m]).abs() <= 1e-6, "frame {i} c{m}: {} vs {}", got[m], cep[m]);
        }
    }
}

#[test]
fn ar2_envelope_within_one_and_a_half_db() {
    let a = ar2();
    let w = wave(all_pole_impulse(&a, 1600, 800));
    let t = analyze(&w, MGC_ALPHA, MGC_GAMMA);
    let spec = mgc_to_spectrum(t.frame(10), 1024, MGC_ALPHA, MGC_GAMMA);
    let lsd = mean_abs_db(&spec, |om| all_pole_db(&a, om), 7000.0);
    assert!(lsd <= 1.5, "mean distortion {lsd} dB");
}

#[test]
fn gain_changes_only_c0() {
    let w = harmonic_plus_noise(110.0, 4000.0, 0.03, 20.0, 0.4, 3);
    let a = analyze(&w, MGC_ALPHA, MGC_GAMMA);
    let b = analyze(&w.scaled(2.0), MGC_ALPHA, MGC_GAMMA);
    for (fa, fb) in a.frames().zip(b.frames()) {
        assert!((fb[0] - fa[0] - 2f64.ln()).abs() < 1e-3);
        for m in 1..fa.len() {
            assert!((fa[m] - fb[m]).abs() <= 1e-4, "c{m}: {} vs {}", fa[m], fb[m]);
        }
    }
}

/// Three-formant vowel: impulse train through cascaded resonators.
fn vowel(f0: f64, secs: f64) -> (contvoc::Waveform, Vec<f64>) {
    let formants = [(700.0, 80.0), (1200.0, 90.0), (2600.0, 120.0)];
    let mut a = vec![1.0];
    for &(f, bw) in &formants {
        let r = (-PI * bw / SR as f64).exp();
        let th = 2.0 * PI * f / SR as f64;
        let sec = [1.0, -2.0 * r * th.cos(), r * r];
        let mut next = vec![0.0; a.len() + 2];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in sec.iter().enumerate() {
                next[i + j] += x * y;
            }
        }
        a = next;
    }
    let n = (secs * SR as f64) as usize;
    let period = SR as f64 / f0;
    let mut y = vec![0.0; n];
    let mut next_pulse = 0.0;
    for t in 0..n {
        let mut v = 0.0;
        if t as f64 >= next_pulse {
            v = 1.0;
            next_pulse += period;
        }
        for (k, &ak) in a.iter().enumerate().skip(1) {
            if t >= k {
                v -= ak * y[t - k];
            }
        }
        y[t] = v;
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (wave(y.iter().map(|v| 0.5 * v / peak).collect()), a)
}

#[test]
fn speech_like_envelope_within_two_db_at_harmonics() {
    let f0 = 120.0;
    let (w, a) = vowel(f0, 0.5);
    let t = analyze(&w, MGC_ALPHA, MGC_GAMMA);
    // Envelope shape only: compare after removing the mean offset, since
    // the absolute level depends on pulse rate and window gain.
    let mut total = 0.0;
    let mut frames = 0;
    for i in 20..t.n_frames() - 20 {
        let spec = mgc_to_spectrum(t.frame(i), 1024, MGC_ALPHA, MGC_GAMMA);
        let hs: Vec<f64> = (1..).map(|h| h as f64 * f0).take_while(|&f| f <= 7000.0).collect();
        let diffs: Vec<f64> = hs
            .iter()
            .map(|&f| {
                let k = (f / SR as f64 * 1024.0).round() as usize;
                20.0 * spec[k].log10() - all_pole_db(&a, 2.0 * PI * f / SR as f64)
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        total += diffs.iter().map(|d| (d - mean).abs()).sum::<f64>() / diffs.len() as f64;
        frames += 1;
    }
    let lsd = total / frames as f64;
    assert_eq!(t.fallback_frames, 0);
    assert!(lsd <= 2.0, "{lsd} dB");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn reconstruction_positive_and_finite(c in proptest::collection::vec(-50.0f64..50.0, 25), gamma in -1.0f64..=0.0) {
        let s = mgc_to_spectrum(&c, 256, MGC_ALPHA, gamma);
        prop_assert!(s.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
