//! Continuous vocoder toolkit.
//!
//! Analysis extracts continuous F0, maximum voiced frequency (MVF) and
//! mel-generalized cepstra (MGC) on a 5 ms frame clock, plus a PCA residual
//! pulse from glottal-closure-aligned LP residual cycles. Synthesis mixes
//! pitch-synchronous residual pulses below MVF with noise above it and
//! filters the result by the MGC envelope. A feedforward network maps
//! linguistic features to the parameter streams and supports average-voice
//! training and fine-tuning adaptation. MCD and F0 correlation cover
//! objective evaluation.

pub mod corpus;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod excitation;
pub mod features;
pub mod model;
pub mod scalar;
pub mod signal;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
pub use scalar::{MatView, Scalar};
pub use signal::{FrameGrid, Waveform};

/// Single-precision network, the default for training.
pub type Network32 = model::Network<f32>;
/// Double-precision network, used for gradient checks.
pub type Network64 = model::Network<f64>;
pub type Dataset32 = model::Dataset<f32>;
pub type Dataset64 = model::Dataset<f64>;
