use super::config::SynthesisConfig;
use super::params::ParamTrack;
use super::synth::synthesize;
use crate::error::{Error, Result};
use crate::excitation::{
    build_residual_prototype, detect_gci, estimate_mvf, track_f0_continuous, F0Config, GciList, MvfConfig,
    PrototypeConfig, ResidualPrototype,
};
use crate::signal::{frame_grid, Waveform};
use crate::spectral::{mgc_analyze, MGC_ALPHA, MGC_GAMMA, MGC_ORDER};

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub f0: F0Config,
    pub mvf: MvfConfig,
    pub window_ms: f64,
    pub mgc_order: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub prototype: PrototypeConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            f0: F0Config::default(),
            mvf: MvfConfig::default(),
            window_ms: 25.0,
            mgc_order: MGC_ORDER,
            alpha: MGC_ALPHA,
            gamma: MGC_GAMMA,
            prototype: PrototypeConfig::default(),
        }
    }
}

/// Parameter streams plus the closure instants found along the way.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub params: ParamTrack,
    pub gcis: GciList,
}

/// F0, MVF, MGC and GCI analysis at the working rate.
pub fn analyze(w: &Waveform, cfg: &AnalysisConfig) -> Result<Analysis> {
    let w = w.clone().to_working_rate();
    let f0 = track_f0_continuous(&w, &cfg.f0)?;
    let mvf = estimate_mvf(&w, &f0, &cfg.mvf)?;
    let grid = frame_grid(&w, cfg.window_ms)?;
    let mgc = mgc_analyze(&w, &grid, cfg.alpha, cfg.gamma, cfg.mgc_order)?;
    let gcis = detect_gci(&w, &f0);
    Ok(Analysis { params: ParamTrack::new(f0, mvf, mgc)?, gcis })
}

/// Analysis followed by synthesis with a prototype built from the same
/// utterance.
pub fn copy_synthesis(w: &Waveform, acfg: &AnalysisConfig, scfg: &SynthesisConfig) -> Result<(Waveform, ParamTrack)> {
    if w.duration() < 0.5 {
        return Err(Error::TooShort(format!("copy synthesis needs at least 0.5 s, got {:.3} s", w.duration())));
    }
    let w = w.clone().to_working_rate();
    let a = analyze(&w, acfg)?;
    let proto: ResidualPrototype = build_residual_prototype(&w, &a.gcis, &a.params.f0, &acfg.prototype)?;
    let out = synthesize(&a.params, &proto, scfg)?;
    Ok((out, a.params))
}
