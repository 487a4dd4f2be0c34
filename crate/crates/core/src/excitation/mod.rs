//! Excitation analysis: continuous F0, maximum voiced frequency, glottal
//! closure instants and the PCA residual pulse.

mod f0;
mod gci;
mod mvf;
mod prototype;

pub use f0::{track_f0_continuous, F0Config, F0Track};
pub use gci::{detect_gci, lp_residual, GciList, LP_ORDER, PRE_EMPHASIS};
pub use mvf::{estimate_mvf, MvfConfig, MvfTrack};
pub use prototype::{
    build_residual_prototype, build_residual_prototype_pooled, principal_component, PrototypeConfig, PrototypeSource,
    PrototypeStats, ResidualPrototype, PROTOTYPE_LEN,
};
