use super::config::SynthesisConfig;
use super::excitation::{build_noise_excitation_shaped, build_voiced_excitation_with};
use super::filter::{crossover_gains, FrameFilter, MinimumPhase};
use super::params::ParamTrack;
use crate::dsp::window::hann;
use crate::error::Result;
use crate::excitation::ResidualPrototype;
use crate::signal::Waveform;
use crate::spectral::mgc_to_log_spectrum;

/// Renders `n_frames * hop` samples: the voiced excitation low-passed at each
/// frame's MVF plus high-passed noise, shaped by the minimum-phase MGC
/// envelope, one overlap-added STFT frame per hop.
pub fn synthesize(p: &ParamTrack, proto: &ResidualPrototype, cfg: &SynthesisConfig) -> Result<Waveform> {
    p.validate()?;
    let hop = p.hop();
    cfg.validate(hop)?;
    let sr = p.sample_rate();
    let n_frames = p.n_frames();
    let n = n_frames * hop;
    if n_frames == 0 {
        return Waveform::new(Vec::new(), sr);
    }

    let log_env: Vec<Vec<f64>> = p
        .mgc
        .frames()
        .map(|c| mgc_to_log_spectrum(c, cfg.fft_len, p.mgc.alpha, p.mgc.gamma))
        .collect();
    // Frame gain = RMS of the envelope across bins, in the log domain.
    let log_gains: Vec<f64> = log_env
        .iter()
        .map(|la| {
            let peak = la.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = la.iter().map(|v| (2.0 * (v - peak)).exp()).sum::<f64>() / la.len() as f64;
            peak + 0.5 * mean.ln()
        })
        .collect();

    let voiced = build_voiced_excitation_with(&p.f0, proto, n, sr, cfg.excitation_norm)?;
    let noise = build_noise_excitation_shaped(&p.mvf, Some(&log_gains), n, cfg, cfg.noise_seed, sr)?;

    // Periodogram amplitudes carry the analysis window's energy.
    let analysis_len = ((cfg.analysis_window_ms / 1000.0) * sr as f64).round().max(1.0) as usize;
    let scale = hann(analysis_len).iter().map(|w| w * w).sum::<f64>().sqrt().recip();

    let mut filter = FrameFilter::new(cfg.fft_len, hop);
    let mut minphase = MinimumPhase::new(cfg.fft_len);
    let win = cfg.ola_window.coefficients(hop);
    let mut lp = vec![0.0; filter.bins()];
    let (mut vs, mut ns, mut resp) = (Vec::new(), Vec::new(), Vec::new());
    let mut vseg = vec![0.0; 2 * hop];
    let mut nseg = vec![0.0; 2 * hop];
    let mut out = vec![0.0; n];
    for i in 0..=n_frames {
        let frame = i.min(n_frames - 1);
        let start = (i * hop) as isize - hop as isize;
        for k in 0..2 * hop {
            let t = start + k as isize;
            let inside = t >= 0 && (t as usize) < n;
            vseg[k] = if inside { voiced.samples[t as usize] * win[k] } else { 0.0 };
            nseg[k] = if inside { noise.samples[t as usize] * win[k] } else { 0.0 };
        }
        crossover_gains(&mut lp, p.mvf.values[frame], cfg, sr, cfg.fft_len, false);
        filter.analyze(&vseg, &mut vs);
        filter.analyze(&nseg, &mut ns);
        minphase.response(&log_env[frame], scale, &mut resp);
        for k in 0..vs.len() {
            vs[k] = (vs[k] * lp[k] + ns[k]) * resp[k];
        }
        filter.accumulate(&vs, start, &mut out);
    }

    level_match(&mut out, &log_gains, scale, hop, analysis_len);

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > cfg.peak_limit {
        log::warn!("output peak {peak:.3} exceeds {}, scaling down", cfg.peak_limit);
        let g = cfg.peak_limit / peak;
        out.iter_mut().for_each(|v| *v *= g);
    }
    Waveform::new(out, sr)
}



const LEVEL_SMOOTHING: usize = 2;

/// The rendered level depends on how the excitation spectrum meets the
/// envelope; a pulse train samples a peaky envelope only at its harmonics.
/// Rescales the output so its windowed power around each frame centre equals
/// the envelope's mean power. Log gains are smoothed over neighbouring frames
/// and interpolated linearly between centres.
fn level_match(out: &mut [f64], log_gains: &[f64], scale: f64, hop: usize, win_len: usize) {
    let win: Vec<f64> = hann(win_len).iter().map(|w| w * w).collect();
    let half = win_len as isize / 2;
    let raw: Vec<f64> = log_gains
        .iter()
        .enumerate()
        .map(|(i, lg)| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (k, w) in win.iter().enumerate() {
                let t = (i * hop) as isize - half + k as isize;
                if t >= 0 && (t as usize) < out.len() {
                    acc += w * out[t as usize] * out[t as usize];
                    wsum += w;
                }
            }
            if acc > 0.0 && wsum > 0.0 { lg + scale.ln() - 0.5 * (acc / wsum).ln() } else { 0.0 }
        })
        .collect();
    let gains: Vec<f64> = (0..raw.len())
        .map(|i| {
            let lo = i.saturating_sub(LEVEL_SMOOTHING);
            let hi = (i + LEVEL_SMOOTHING).min(raw.len() - 1);
            (raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64).exp()
        })
        .collect();
    let last = gains.len() - 1;
    for (t, v) in out.iter_mut().enumerate() {
        let pos = t as f64 / hop as f64;
        let i = (pos.floor() as usize).min(last);
        let j = (i + 1).min(last);
        let f = (pos - i as f64).min(1.0);
        *v *= gains[i] + f * (gains[j] - gains[i]);
    }
}
