//! Synthetic corpora and utterance manifests.

mod generator;
mod manifest;

pub use generator::{
    generate_corpus, generate_utterances, phone_symbols, render, speaker_profile, CorpusKind, CorpusSpec,
    SpeakerProfile, SyntheticUtterance,
};
pub use manifest::{assign_splits, CorpusManifest, ManifestRow, Split, SplitFractions};
