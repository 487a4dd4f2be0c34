//! Mel-generalized cepstral envelopes.

mod mgc;
mod track;
pub mod transform;

pub use mgc::{
    mgc_analyze, mgc_to_log_spectrum, mgc_to_spectrum, MgcAnalyzer, ANALYSIS_FFT_LEN, MGC_ALPHA, MGC_GAMMA,
    MGC_ORDER, POWER_FLOOR,
};
pub use track::{read_mgc, sidecar_path, write_mgc, MgcTrack};
