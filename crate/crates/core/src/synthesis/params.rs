use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::excitation::{F0Track, MvfTrack};
use crate::signal::{read_stream, write_stream};
use crate::spectral::{read_mgc, write_mgc, MgcTrack};

/// The three vocoder streams on one frame clock.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTrack {
    pub f0: F0Track,
    pub mvf: MvfTrack,
    pub mgc: MgcTrack,
}

impl ParamTrack {
    pub fn new(f0: F0Track, mvf: MvfTrack, mgc: MgcTrack) -> Result<Self> {
        let p = Self { f0, mvf, mgc };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.f0.len();
        if self.mvf.len() != n {
            return Err(Error::LengthMismatch { left: n, right: self.mvf.len() });
        }
        if self.mgc.n_frames() != n {
            return Err(Error::LengthMismatch { left: n, right: self.mgc.n_frames() });
        }
        if self.f0.hop != self.mvf.hop || self.f0.hop != self.mgc.hop || self.f0.hop == 0 {
            return Err(Error::SchemaMismatch(format!(
                "stream hops differ: f0 {}, mvf {}, mgc {}",
                self.f0.hop, self.mvf.hop, self.mgc.hop
            )));
        }
        if let Some(i) = self.f0.values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(format!("F0 at frame {i} is not positive")));
        }
        if let Some(i) = self.mvf.values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(format!("MVF at frame {i} is not positive")));
        }
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        self.f0.len()
    }

    pub fn hop(&self) -> usize {
        self.f0.hop
    }

    pub fn sample_rate(&self) -> u32 {
        self.mgc.sample_rate
    }

    /// `dir/stem.lf0`, `dir/stem.mvf`, `dir/stem.mgc`.
    pub fn paths(dir: &Path, stem: &str) -> [PathBuf; 3] {
        ["lf0", "mvf", "mgc"].map(|ext| dir.join(format!("{stem}.{ext}")))
    }

    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let [lf0, mvf, mgc] = Self::paths(dir, stem);
        write_stream(&lf0, &self.f0.to_log())?;
        write_stream(&mvf, &self.mvf.values)?;
        write_mgc(&mgc, &self.mgc)
    }

    /// Loads the three streams; the frame clock comes from the MGC sidecar.
    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let [lf0, mvf, mgc] = Self::paths(dir, stem);
        let mgc = read_mgc(&mgc)?;
        let f0 = F0Track::from_log(&read_stream(&lf0)?, mgc.hop);
        let mvf = MvfTrack::new(read_stream(&mvf)?, mgc.hop);
        Self::new(f0, mvf, mgc)
    }
}
