//! Continuous fundamental-frequency tracking.
//!
//! Each frame gets a YIN-style estimate (cumulative-mean-normalised
//! difference function). Frames whose periodicity clears the threshold are
//! anchors; the contour is interpolated linearly in log-F0 between anchors,
//! held flat past the first and last anchor, then passed through a 3-point
//! median and a 3-point moving average.

use crate::dsp::{Complex, RealFft};
use crate::error::{Error, Result};
use crate::signal::{FrameGrid, Waveform};

#[derive(Clone, Debug, PartialEq)]
pub struct F0Config {
    pub f0_floor: f64,
    pub f0_ceil: f64,
    /// Frames with periodicity (1 - CMNDF minimum) below this are unanchored.
    pub periodicity_threshold: f64,
    /// Absolute CMNDF threshold for picking the first dip.
    pub dip_threshold: f64,
    /// A dip at a submultiple of the chosen lag wins when its CMNDF is at
    /// most this much higher.
    pub octave_tolerance: f64,
    /// Apply the median + moving-average smoothing.
    pub smoothing: bool,
}

impl Default for F0Config {
    fn default() -> Self {
        Self {
            f0_floor: 60.0,
            f0_ceil: 400.0,
            periodicity_threshold: 0.45,
            dip_threshold: 0.15,
            octave_tolerance: 0.1,
            smoothing: true,
        }
    }
}

impl F0Config {
    pub fn validate(&self) -> Result<()> {
        if !(50.0 <= self.f0_floor && self.f0_floor < self.f0_ceil && self.f0_ceil <= 500.0) {
            return Err(Error::InvalidArgument(format!(
                "F0 bounds must satisfy 50 <= floor < ceil <= 500, got {}..{}",
                self.f0_floor, self.f0_ceil
            )));
        }
        Ok(())
    }

    /// Contour value used when no frame is anchored.
    pub fn fallback(&self) -> f64 {
        (self.f0_floor * self.f0_ceil).sqrt()
    }
}

/// Per-frame F0 in Hz on the 5 ms grid; positive everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct F0Track {
    pub values: Vec<f64>,
    /// Frames whose periodicity cleared the threshold. Tracks loaded from
    /// disk or predicted by a model mark every frame as anchored.
    pub anchored: Vec<bool>,
    pub hop: usize,
}

impl F0Track {
    pub fn new(values: Vec<f64>, hop: usize) -> Self {
        let anchored = vec![true; values.len()];
        Self { values, anchored, hop }
    }

    pub fn from_log(lf0: &[f64], hop: usize) -> Self {
        Self::new(lf0.iter().map(|v| v.exp()).collect(), hop)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_log(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.ln()).collect()
    }

    /// F0 linearly interpolated at a (fractional) sample position.
    pub fn at_sample(&self, pos: f64) -> f64 {
        let x = pos / self.hop as f64;
        if self.values.is_empty() {
            return f64::NAN;
        }
        let last = self.values.len() - 1;
        if x <= 0.0 {
            return self.values[0];
        }
        let i = x.floor() as usize;
        if i >= last {
            return self.values[last];
        }
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

/// Raw per-frame YIN estimate.
#[derive(Clone, Copy, Debug)]
struct FrameEstimate {
    f0: f64,
    periodicity: f64,
}

struct Yin {
    tau_min: usize,
    tau_max: usize,
    window: usize,
    fft: RealFft,
    a: Vec<Complex>,
    b: Vec<Complex>,
    corr: Vec<f64>,
    diff: Vec<f64>,
    cmnd: Vec<f64>,
}

impl Yin {
    fn new(sample_rate: u32, cfg: &F0Config) -> Self {
        let sr = sample_rate as f64;
        let tau_min = ((sr / cfg.f0_ceil).floor() as usize).max(2);
        let tau_max = (sr / cfg.f0_floor).ceil() as usize + 1;
        let window = tau_max;
        let fft = RealFft::new((window + tau_max + 1).next_power_of_two());
        Self {
            tau_min,
            tau_max,
            window,
            fft,
            a: Vec::new(),
            b: Vec::new(),
            corr: Vec::new(),
            diff: vec![0.0; tau_max + 2],
            cmnd: vec![0.0; tau_max + 2],
        }
    }

    fn span(&self) -> usize {
        self.window + self.tau_max + 1
    }

    fn estimate(&mut self, seg: &[f64], sample_rate: u32, cfg: &F0Config) -> FrameEstimate {
        let w = self.window;
        let tmax = self.tau_max;
        debug_assert_eq!(seg.len(), self.span());
        let unvoiced = FrameEstimate { f0: f64::NAN, periodicity: 0.0 };

        // r(tau) = sum_{j<w} x_j x_{j+tau} via one FFT product.
        let head: Vec<f64> = seg[..w].to_vec();
        self.fft.forward(&head, &mut self.a);
        self.fft.forward(seg, &mut self.b);
        let prod: Vec<Complex> = self.a.iter().zip(&self.b).map(|(x, y)| x.conj() * y).collect();
        self.fft.inverse(&prod, &mut self.corr);

        let mut prefix = Vec::with_capacity(seg.len() + 1);
        prefix.push(0.0);
        for v in seg {
            prefix.push(prefix.last().unwrap() + v * v);
        }
        let energy = |start: usize| prefix[start + w] - prefix[start];
        let e0 = energy(0);
        if e0 <= 1e-20 * w as f64 {
            return unvoiced;
        }

        self.diff[0] = 0.0;
        for tau in 1..=tmax {
            self.diff[tau] = (e0 + energy(tau) - 2.0 * self.corr[tau]).max(0.0);
        }
        self.cmnd[0] = 1.0;
        let mut running = 0.0;
        for tau in 1..=tmax {
            running += self.diff[tau];
            self.cmnd[tau] = if running > 0.0 { self.diff[tau] * tau as f64 / running } else { 1.0 };
        }

        let lo = self.tau_min;
        let hi = tmax - 1;
        let mut best = None;
        let mut tau = lo;
        while tau <= hi {
            if self.cmnd[tau] < cfg.dip_threshold {
                while tau < hi && self.cmnd[tau + 1] < self.cmnd[tau] {
                    tau += 1;
                }
                best = Some(tau);
                break;
            }
            tau += 1;
        }
        let mut tau = best.unwrap_or_else(|| {
            (lo..=hi)
                .min_by(|&a, &b| self.cmnd[a].total_cmp(&self.cmnd[b]))
                .expect("non-empty lag range")
        });
        // Guard against picking a multiple of the period.
        for k in [3usize, 2] {
            let centre = (tau as f64 / k as f64).round() as usize;
            if centre < lo + 2 {
                continue;
            }
            let sub = (centre - 2..=(centre + 2).min(hi))
                .min_by(|&a, &b| self.cmnd[a].total_cmp(&self.cmnd[b]))
                .expect("non-empty window");
            let is_dip = self.cmnd[sub] <= self.cmnd[sub - 1] && self.cmnd[sub] <= self.cmnd[sub + 1];
            if is_dip && self.cmnd[sub] <= self.cmnd[tau] + cfg.octave_tolerance {
                tau = sub;
                break;
            }
        }

        // Parabolic refinement on the raw difference function.
        let (d0, d1, d2) = (self.diff[tau - 1], self.diff[tau], self.diff[tau + 1]);
        let denom = d0 - 2.0 * d1 + d2;
        let shift = if denom > 0.0 { (0.5 * (d0 - d2) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        let period = tau as f64 + shift;
        FrameEstimate {
            f0: sample_rate as f64 / period,
            periodicity: (1.0 - self.cmnd[tau]).clamp(0.0, 1.0),
        }
    }
}

fn median3(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return x[i];
            }
            let mut w = [x[i - 1], x[i], x[i + 1]];
            w.sort_by(f64::total_cmp);
            w[1]
        })
        .collect()
}

fn moving_average3(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let a = x[i.saturating_sub(1)];
            let c = x[(i + 1).min(n - 1)];
            (a + x[i] + c) / 3.0
        })
        .collect()
}

/// Log-domain linear interpolation through anchored frames, holding the
/// edge anchors flat; the fallback when nothing is anchored.
fn interpolate_contour(raw: &[f64], anchored: &[bool], fallback: f64) -> Vec<f64> {
    let anchors: Vec<usize> = (0..raw.len()).filter(|&i| anchored[i]).collect();
    if anchors.is_empty() {
        return vec![fallback; raw.len()];
    }
    let mut out = vec![0.0; raw.len()];
    let first = anchors[0];
    let last = *anchors.last().unwrap();
    for v in out.iter_mut().take(first + 1) {
        *v = raw[first].ln();
    }
    for v in out.iter_mut().skip(last) {
        *v = raw[last].ln();
    }
    for pair in anchors.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (la, lb) = (raw[a].ln(), raw[b].ln());
        for i in a..=b {
            let t = (i - a) as f64 / (b - a) as f64;
            out[i] = la + t * (lb - la);
        }
    }
    out.iter().map(|v| v.exp()).collect()
}

/// Tracks a continuous F0 contour on the 5 ms grid of `w`.
pub fn track_f0_continuous(w: &Waveform, cfg: &F0Config) -> Result<F0Track> {
    cfg.validate()?;
    let grid = FrameGrid::for_len(w.len(), w.sample_rate, 25.0)?;
    let mut yin = Yin::new(w.sample_rate, cfg);
    let span = yin.span();
    if w.len() < (2 * grid.hop).max(span / 2) {
        return Err(Error::TooShort(format!(
            "{} samples is shorter than the {} sample F0 analysis window",
            w.len(),
            span / 2
        )));
    }

    let mut seg = Vec::with_capacity(span);
    let mut raw = Vec::with_capacity(grid.n_frames);
    let mut anchored = Vec::with_capacity(grid.n_frames);
    for i in 0..grid.n_frames {
        // The integration window is centred on the frame centre.
        let start = grid.center(i) as isize - (yin.window / 2) as isize - (yin.tau_max / 2) as isize;
        seg.clear();
        seg.extend((0..span as isize).map(|k| {
            let idx = start + k;
            if idx >= 0 && (idx as usize) < w.len() {
                w.samples[idx as usize]
            } else {
                0.0
            }
        }));
        let est = yin.estimate(&seg, w.sample_rate, cfg);
        let ok = est.f0.is_finite()
            && est.periodicity >= cfg.periodicity_threshold
            && est.f0 >= cfg.f0_floor
            && est.f0 <= cfg.f0_ceil;
        raw.push(est.f0);
        anchored.push(ok);
    }

    let mut values = interpolate_contour(&raw, &anchored, cfg.fallback());
    if cfg.smoothing && values.len() >= 3 {
        values = moving_average3(&median3(&values));
    }
    for v in &mut values {
        *v = v.clamp(cfg.f0_floor, cfg.f0_ceil);
    }
    Ok(F0Track { values, anchored, hop: grid.hop })
}
