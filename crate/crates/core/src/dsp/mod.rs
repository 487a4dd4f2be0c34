//! Small signal-processing building blocks shared by the analysis and
//! synthesis stages.

pub mod fft;
pub mod linalg;
pub mod lpc;
pub mod window;

pub use fft::{Complex, RealFft};
