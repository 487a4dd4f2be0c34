//! Audio containers, WAV I/O, resampling and the shared 5 ms frame clock.

mod frame;
mod resample;
mod stream;
mod wav;

pub use frame::{frame_grid, FrameGrid, HOP_SECONDS};
pub use resample::{resample, Resampler};
pub use stream::{decode_stream, encode_stream, read_stream, read_stream_frames, write_stream};
pub use wav::{read_wav, write_atomic, write_wav};
pub(crate) use wav::write_atomic as write_atomic_bytes;

use crate::error::{Error, Result};

/// Working sample rate of the whole toolkit.
pub const WORKING_RATE: u32 = 16_000;

/// Mono sample sequence at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Resamples to [`WORKING_RATE`] unless already there.
    pub fn to_working_rate(self) -> Self {
        if self.sample_rate == WORKING_RATE {
            self
        } else {
            resample(&self, WORKING_RATE)
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}
