//! Objective metrics, corpus reports and spectrogram rendering.

mod metrics;
mod report;
mod spectrogram;

pub use metrics::{align_tracks, f0_corr, f0_corr_voiced, mcd, mcd_frames, pearson, McdConfig, McdScaling, Track, MCD_DB_SCALE};
pub use report::{
    evaluate_corpus, load_eval_manifest, parse_eval_manifest, score_entry, score_tracks, Cell, EvalConfig, EvalEntry,
    EvalReport, EvalSplit, UtteranceScore,
};
pub use spectrogram::{
    compute_spectrogram, encode_png, render_rgb, render_spectrogram, stft_power, Spectrogram, SpectrogramConfig,
};
