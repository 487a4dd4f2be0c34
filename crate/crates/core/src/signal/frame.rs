use super::Waveform;
use crate::error::{Error, Result};

/// Frame shift shared by every parameter stream.
pub const HOP_SECONDS: f64 = 0.005;

/// The 5 ms frame clock. Frame `i` is centred on sample `i * hop`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameGrid {
    pub hop: usize,
    pub frame_len: usize,
    pub n_frames: usize,
    pub sample_rate: u32,
}

impl FrameGrid {
    pub fn hop_for(sample_rate: u32) -> usize {
        ((HOP_SECONDS * sample_rate as f64).round() as usize).max(1)
    }

    pub fn for_len(n_samples: usize, sample_rate: u32, window_ms: f64) -> Result<Self> {
        if !(window_ms >= 5.0) {
            return Err(Error::InvalidArgument(format!("analysis window {window_ms} ms is shorter than the 5 ms hop")));
        }
        let hop = Self::hop_for(sample_rate);
        let frame_len = (window_ms * 1e-3 * sample_rate as f64).round() as usize;
        Ok(Self { hop, frame_len, n_frames: n_samples.div_ceil(hop), sample_rate })
    }

    /// Grid with a given frame count (used when streams come from disk).
    pub fn with_frames(n_frames: usize, sample_rate: u32, window_ms: f64) -> Result<Self> {
        let mut g = Self::for_len(0, sample_rate, window_ms)?;
        g.n_frames = n_frames;
        Ok(g)
    }

    pub fn center(&self, frame: usize) -> usize {
        frame * self.hop
    }

    /// Number of samples the grid spans.
    pub fn n_samples(&self) -> usize {
        self.n_frames * self.hop
    }

    /// Copies the `len`-sample window centred on `frame`, zero-padding past
    /// either end of `samples`.
    pub fn extract(&self, samples: &[f64], frame: usize, len: usize, out: &mut Vec<f64>) {
        out.clear();
        let start = self.center(frame) as isize - (len / 2) as isize;
        out.extend((0..len as isize).map(|k| {
            let idx = start + k;
            if idx >= 0 && (idx as usize) < samples.len() {
                samples[idx as usize]
            } else {
                0.0
            }
        }));
    }
}

pub fn frame_grid(w: &Waveform, window_ms: f64) -> Result<FrameGrid> {
    FrameGrid::for_len(w.len(), w.sample_rate, window_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wave(n: usize) -> Waveform {
        Waveform::new(vec![0.0; n], 16_000).unwrap()
    }

    #[test]
    fn grid_arithmetic() {
        let g = frame_grid(&wave(16_000), 25.0).unwrap();
        assert_eq!((g.hop, g.frame_len, g.n_frames), (80, 400, 200));
        assert_eq!(frame_grid(&wave(81), 25.0).unwrap().n_frames, 2);
        assert_eq!(frame_grid(&wave(0), 25.0).unwrap().n_frames, 0);
        assert!(frame_grid(&wave(10), 4.0).is_err());
    }

    #[test]
    fn extract_pads_edges() {
        let g = frame_grid(&Waveform::new((1..=10).map(f64::from).collect(), 16_000).unwrap(), 25.0).unwrap();
        let mut out = Vec::new();
        g.extract(&(1..=10).map(f64::from).collect::<Vec<_>>(), 0, 4, &mut out);
        assert_eq!(out, vec![0.0, 0.0, 1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn concat_frame_count(a in 0usize..5000, b in 0usize..5000) {
            let n = |k| frame_grid(&wave(k), 25.0).unwrap().n_frames;
            prop_assert!(n(a + b) + 1 >= n(a) + n(b));
        }
    }
}
