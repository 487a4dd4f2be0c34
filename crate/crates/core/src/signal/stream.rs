//! Headerless little-endian float32 parameter streams (.lf0, .mvf, .mgc).

use std::path::Path;

use crate::error::{Error, Result};

pub fn encode_stream(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn decode_stream(bytes: &[u8], what: &str) -> Result<Vec<f64>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::malformed(what, format!("{} bytes is not a whole number of float32 values", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_stream(path: &Path, values: &[f64]) -> Result<()> {
    super::write_atomic_bytes(path, &encode_stream(values))
}

pub fn read_stream(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_stream(&bytes, &path.display().to_string())
}

/// Reads a frame-major stream of `width` values per frame.
pub fn read_stream_frames(path: &Path, width: usize) -> Result<Vec<f64>> {
    let values = read_stream(path)?;
    if width == 0 || values.len() % width != 0 {
        return Err(Error::malformed(
            path.display().to_string(),
            format!("{} values do not split into frames of {width}", values.len()),
        ));
    }
    Ok(values)
}
