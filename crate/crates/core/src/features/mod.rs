//! Linguistic input features, duration targets and normalisation.

mod alignment;
mod encode;
mod inventory;
mod norm;

pub use alignment::{parse_alignment, parse_alignment_str, AlignedUtterance, PhoneEntry, MAX_GAP_SECONDS};
pub use encode::{
    acoustic_width, duration_targets, duration_width, encode_duration_features, encode_linguistic_features,
    FeatureMatrix, CONTEXT,
};
pub use inventory::{PhoneInventory, EDGE};
pub use norm::{compute_stats, NormKind, NormStats, MAX_TARGET, MIN_TARGET};
