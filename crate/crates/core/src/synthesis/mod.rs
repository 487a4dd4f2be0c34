//! Waveform reconstruction from vocoder parameters.

mod config;
mod copy;
mod excitation;
mod filter;
mod params;
mod synth;

pub use config::{ExcitationNorm, OlaWindow, SynthesisConfig, UnvoicedEnvelope};
pub use copy::{analyze, copy_synthesis, Analysis, AnalysisConfig};
pub use excitation::{
    build_noise_excitation, build_noise_excitation_shaped, build_voiced_excitation, build_voiced_excitation_with,
    excitation_instants, white_noise,
};
pub use filter::{crossover_gains, FrameFilter, MinimumPhase};
pub use params::ParamTrack;
pub use synth::synthesize;
