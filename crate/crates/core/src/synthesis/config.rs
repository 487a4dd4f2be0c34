use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Time-domain shaping of the noise in frames whose MVF sits at the floor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnvoicedEnvelope {
    None,
    /// Triangular per-frame window in place of the synthesis window.
    Triangular,
    /// Noise amplitude follows the per-sample interpolated frame-gain
    /// trajectory of the spectral envelope.
    #[default]
    AmplitudeFollow,
}

impl FromStr for UnvoicedEnvelope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "triangular" => Ok(Self::Triangular),
            "amplitude-follow" => Ok(Self::AmplitudeFollow),
            other => Err(Error::InvalidArgument(format!("unknown unvoiced envelope {other:?}"))),
        }
    }
}

impl fmt::Display for UnvoicedEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Triangular => "triangular",
            Self::AmplitudeFollow => "amplitude-follow",
        })
    }
}

/// Overlap-add window; both are constant-overlap-add at half overlap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OlaWindow {
    #[default]
    Hann,
    Triangular,
}

impl OlaWindow {
    /// Window of length `2 * hop` whose shifted copies sum to one.
    pub fn coefficients(self, hop: usize) -> Vec<f64> {
        let len = 2 * hop;
        (0..len)
            .map(|i| {
                let x = i as f64 / len as f64;
                match self {
                    Self::Hann => (std::f64::consts::PI * x).sin().powi(2),
                    Self::Triangular => 1.0 - (2.0 * x - 1.0).abs(),
                }
            })
            .collect()
    }
}

impl FromStr for OlaWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Self::Hann),
            "triangular" => Ok(Self::Triangular),
            other => Err(Error::InvalidArgument(format!("unknown synthesis window {other:?}"))),
        }
    }
}

impl fmt::Display for OlaWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hann => "hann",
            Self::Triangular => "triangular",
        })
    }
}

/// Where the voiced excitation is brought to unit power.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExcitationNorm {
    #[default]
    PerPeriod,
    PerFrame,
}

impl FromStr for ExcitationNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-period" => Ok(Self::PerPeriod),
            "per-frame" => Ok(Self::PerFrame),
            other => Err(Error::InvalidArgument(format!("unknown excitation normalisation {other:?}"))),
        }
    }
}

impl fmt::Display for ExcitationNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerPeriod => "per-period",
            Self::PerFrame => "per-frame",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisConfig {
    pub fft_len: usize,
    pub ola_window: OlaWindow,
    pub noise_seed: u64,
    pub unvoiced_envelope: UnvoicedEnvelope,
    /// dB per octave of the MVF crossover transition.
    pub crossover_slope: f64,
    pub excitation_norm: ExcitationNorm,
    /// Frames with MVF at or below this are treated as unvoiced.
    pub mvf_floor: f64,
    /// Analysis window length the envelopes were measured with; sets the
    /// periodogram-to-amplitude scale.
    pub analysis_window_ms: f64,
    /// Output peaks above this are scaled down as a whole.
    pub peak_limit: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            fft_len: 1024,
            ola_window: OlaWindow::Hann,
            noise_seed: 0,
            unvoiced_envelope: UnvoicedEnvelope::AmplitudeFollow,
            crossover_slope: 240.0,
            excitation_norm: ExcitationNorm::PerPeriod,
            mvf_floor: 800.0,
            analysis_window_ms: 25.0,
            peak_limit: 4.0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self, hop: usize) -> Result<()> {
        if self.fft_len < 2 * hop || self.fft_len < 256 || !self.fft_len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "fft_len {} must be a power of two >= 256 and >= twice the hop ({hop})",
                self.fft_len
            )));
        }
        if !(self.crossover_slope > 0.0 && self.crossover_slope.is_finite()) {
            return Err(Error::InvalidArgument("crossover_slope must be positive".into()));
        }
        if !(self.peak_limit > 0.0) || !(self.analysis_window_ms > 0.0) {
            return Err(Error::InvalidArgument("peak_limit and analysis_window_ms must be positive".into()));
        }
        Ok(())
    }

    /// Width of the crossover transition in octaves (60 dB of roll-off).
    pub fn transition_octaves(&self) -> f64 {
        60.0 / self.crossover_slope
    }

    pub fn is_unvoiced(&self, mvf: f64) -> bool {
        mvf <= self.mvf_floor + 1e-6
    }
}
