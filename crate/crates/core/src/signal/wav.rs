//! RIFF/WAVE reading (PCM 8/16/24/32-bit integer, 32/64-bit float) and
//! 16-bit PCM mono writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(Error::TruncatedHeader(format!("fmt chunk has {} bytes, need 16", body.len())));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let bits = u16_at(body, 14);
    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(Error::TruncatedHeader("extensible fmt chunk without sub-format".into()));
        }
        tag = u16_at(body, 24);
    }
    let supported = match tag {
        FORMAT_PCM => matches!(bits, 8 | 16 | 24 | 32),
        FORMAT_FLOAT => matches!(bits, 32 | 64),
        _ => false,
    };
    if !supported {
        return Err(Error::UnsupportedFormat(format!("codec tag 0x{tag:04x} with {bits} bits per sample")));
    }
    if channels == 0 || sample_rate == 0 {
        return Err(Error::malformed("fmt chunk", "zero channels or sample rate"));
    }
    Ok(Format { tag, channels, sample_rate, bits })
}

fn decode(fmt: &Format, data: &[u8]) -> Vec<f64> {
    let width = fmt.bits as usize / 8;
    let channels = fmt.channels as usize;
    let frame = width * channels;
    let n = data.len() / frame;
    let sample = |off: usize| -> f64 {
        let b = &data[off..off + width];
        match (fmt.tag, fmt.bits) {
            (FORMAT_PCM, 8) => (b[0] as f64 - 128.0) / 128.0,
            (FORMAT_PCM, 16) => i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
            (FORMAT_PCM, 24) => {
                let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
                v as f64 / 8_388_608.0
            }
            (FORMAT_PCM, 32) => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0,
            (FORMAT_FLOAT, 32) => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            (FORMAT_FLOAT, 64) => f64::from_le_bytes(b.try_into().expect("8 bytes")),
            _ => unreachable!("rejected in parse_fmt"),
        }
    };
    (0..n)
        .map(|i| {
            let sum: f64 = (0..channels).map(|c| sample(i * frame + c * width)).sum();
            let v = sum / channels as f64;
            if v.is_finite() {
                v.clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Reads a WAV file as a mono waveform (channels averaged) in `[-1, 1]`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes)
}

pub(crate) fn parse_wav(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < 12 {
        return Err(Error::TruncatedHeader(format!("{} bytes is shorter than a RIFF header", bytes.len())));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::UnsupportedFormat("not a RIFF/WAVE file".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<Format> = None;
    loop {
        if pos + 8 > bytes.len() {
            return Err(Error::TruncatedHeader(if fmt.is_none() {
                "missing fmt chunk".into()
            } else {
                "missing data chunk".into()
            }));
        }
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = bytes.len() - body_start;
        match id {
            b"fmt " => {
                if size > available {
                    return Err(Error::TruncatedHeader(format!("fmt chunk declares {size} bytes, {available} present")));
                }
                fmt = Some(parse_fmt(&bytes[body_start..body_start + size])?);
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| Error::malformed("wav", "data chunk precedes fmt chunk"))?;
                if size > available {
                    return Err(Error::TruncatedData { declared: size, available });
                }
                let samples = decode(&fmt, &bytes[body_start..body_start + size]);
                return Waveform::new(samples, fmt.sample_rate);
            }
            _ => {
                if size > available {
                    return Err(Error::TruncatedHeader(format!(
                        "chunk {:?} declares {size} bytes, {available} present",
                        String::from_utf8_lossy(id)
                    )));
                }
            }
        }
        pos = body_start + size + (size & 1);
    }
}

/// Encodes as 16-bit PCM mono. Returns the bytes and the number of samples
/// that had to be clipped to `[-1, 1]`.
pub(crate) fn encode_wav(w: &Waveform) -> (Vec<u8>, usize) {
    let data_len = w.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    let mut clipped = 0;
    for &s in &w.samples {
        let v = if s > 1.0 || s < -1.0 {
            clipped += 1;
            s.clamp(-1.0, 1.0)
        } else {
            s
        };
        let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    (out, clipped)
}

/// Writes a 16-bit PCM mono file. Samples outside `[-1, 1]` are clipped and
/// counted in the return value. The file appears atomically.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<usize> {
    let path = path.as_ref();
    let (bytes, clipped) = encode_wav(w);
    if clipped > 0 {
        log::warn!("{}: clipped {clipped} samples", path.display());
    }
    write_atomic(path, &bytes)?;
    Ok(clipped)
}

/// Writes via a sibling temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::Io { path: path.to_path_buf(), source: e });
    }
    Ok(())
}
