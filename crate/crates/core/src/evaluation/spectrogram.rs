use std::path::Path;

use crate::dsp::window::hann;
use crate::dsp::RealFft;
use crate::error::{Error, Result};
use crate::excitation::MvfTrack;
use crate::signal::Waveform;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrogramConfig {
    pub fft_len: usize,
    pub hop_ms: f64,
    pub dynamic_range_db: f64,
    /// Integer pixel replication in both directions.
    pub zoom: usize,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        Self { fft_len: 1024, hop_ms: 5.0, dynamic_range_db: 70.0, zoom: 1 }
    }
}

impl SpectrogramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_len < 2 || !self.fft_len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("FFT length {} must be a power of two", self.fft_len)));
        }
        if !(self.hop_ms > 0.0 && self.dynamic_range_db > 0.0) || self.zoom == 0 {
            return Err(Error::InvalidArgument("hop, dynamic range and zoom must be positive".into()));
        }
        Ok(())
    }
}

/// Log-magnitude STFT, column-major (one column per hop).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    /// Level in dB relative to the loudest cell, clipped to `-dynamic_range`.
    pub db: Vec<f64>,
    pub columns: usize,
    pub bins: usize,
    pub sample_rate: u32,
    pub hop: usize,
    pub dynamic_range_db: f64,
}

impl Spectrogram {
    pub fn column(&self, c: usize) -> &[f64] {
        &self.db[c * self.bins..(c + 1) * self.bins]
    }

    pub fn argmax_bin(&self, c: usize) -> usize {
        let col = self.column(c);
        (0..self.bins).fold(0, |best, k| if col[k] > col[best] { k } else { best })
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / (2 * (self.bins - 1)) as f64
    }
}

/// Raw power per column and bin, before the dB clip.
pub fn stft_power(w: &Waveform, cfg: &SpectrogramConfig) -> Result<(Vec<f64>, usize, usize)> {
    cfg.validate()?;
    if w.is_empty() {
        return Err(Error::TooShort("spectrogram of an empty waveform".into()));
    }
    let hop = ((cfg.hop_ms / 1000.0 * w.sample_rate as f64).round() as usize).max(1);
    let columns = w.len().div_ceil(hop);
    let win = hann(cfg.fft_len);
    let mut fft = RealFft::new(cfg.fft_len);
    let bins = fft.bins();
    let half = cfg.fft_len / 2;
    let mut frame = vec![0.0; cfg.fft_len];
    let mut power = Vec::with_capacity(bins);
    let mut out = Vec::with_capacity(columns * bins);
    for c in 0..columns {
        let centre = (c * hop) as isize;
        for (k, v) in frame.iter_mut().enumerate() {
            let i = centre + k as isize - half as isize;
            *v = if i >= 0 && (i as usize) < w.len() { w.samples[i as usize] * win[k] } else { 0.0 };
        }
        fft.power(&frame, &mut power);
        out.extend_from_slice(&power);
    }
    Ok((out, columns, hop))
}

pub fn compute_spectrogram(w: &Waveform, cfg: &SpectrogramConfig) -> Result<Spectrogram> {
    let (power, columns, hop) = stft_power(w, cfg)?;
    let bins = cfg.fft_len / 2 + 1;
    let peak = power.iter().fold(0.0f64, |m, &p| m.max(p)).max(1e-300);
    let floor = -cfg.dynamic_range_db;
    let db = power.iter().map(|&p| (10.0 * (p.max(1e-300) / peak).log10()).max(floor)).collect();
    Ok(Spectrogram { db, columns, bins, sample_rate: w.sample_rate, hop, dynamic_range_db: cfg.dynamic_range_db })
}

/// Black through red and yellow to white.
fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let ch = |lo: f64| (((t - lo) * 3.0).clamp(0.0, 1.0) * 255.0).round() as u8;
    [ch(0.0), ch(1.0 / 3.0), ch(2.0 / 3.0)]
}

const OVERLAY: [u8; 3] = [0, 255, 255];

/// RGB raster: time left to right, 0 Hz at the bottom row.
pub fn render_rgb(s: &Spectrogram, overlay: Option<&MvfTrack>, zoom: usize) -> (Vec<u8>, usize, usize) {
    let (w, h) = (s.columns * zoom, s.bins * zoom);
    let mut img = vec![0u8; w * h * 3];
    for c in 0..s.columns {
        let col = s.column(c);
        for k in 0..s.bins {
            let rgb = colormap(1.0 + col[k] / s.dynamic_range_db);
            let row0 = (s.bins - 1 - k) * zoom;
            for dy in 0..zoom {
                for dx in 0..zoom {
                    let p = ((row0 + dy) * w + c * zoom + dx) * 3;
                    img[p..p + 3].copy_from_slice(&rgb);
                }
            }
        }
    }
    if let Some(mvf) = overlay {
        let nyquist = s.sample_rate as f64 / 2.0;
        let scale = mvf.hop as f64 / s.hop as f64;
        let mut prev: Option<usize> = None;
        for x in 0..w {
            let t = (x / zoom) as f64 / scale;
            let i = (t.round() as usize).min(mvf.len().saturating_sub(1));
            let Some(&f) = mvf.values.get(i) else { break };
            let y = ((1.0 - (f / nyquist).clamp(0.0, 1.0)) * (h - 1) as f64).round() as usize;
            let (lo, hi) = match prev {
                Some(p) => (p.min(y), p.max(y)),
                None => (y, y),
            };
            for yy in lo..=hi {
                let p = (yy * w + x) * 3;
                img[p..p + 3].copy_from_slice(&OVERLAY);
            }
            prev = Some(y);
        }
    }
    (img, w, h)
}

pub fn encode_png(rgb: &[u8], width: usize, height: usize) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let to_err = |e: png::EncodingError| Error::InvalidArgument(format!("PNG encoding: {e}"));
        let mut wr = enc.write_header().map_err(to_err)?;
        wr.write_image_data(rgb).map_err(to_err)?;
    }
    Ok(out)
}

/// Writes the spectrogram PNG and returns the computed matrix.
pub fn render_spectrogram(
    w: &Waveform,
    cfg: &SpectrogramConfig,
    overlay: Option<&MvfTrack>,
    path: &Path,
) -> Result<Spectrogram> {
    let s = compute_spectrogram(w, cfg)?;
    let (rgb, width, height) = render_rgb(&s, overlay, cfg.zoom);
    crate::signal::write_atomic_bytes(path, &encode_png(&rgb, width, height)?)?;
    Ok(s)
}
