use std::path::Path;

use crate::error::{Error, Result};

/// Largest silent gap between consecutive entries that is closed silently.
pub const MAX_GAP_SECONDS: f64 = 0.001;

#[derive(Clone, Debug, PartialEq)]
pub struct PhoneEntry {
    pub phone: String,
    pub start: f64,
    pub end: f64,
}

impl PhoneEntry {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Contiguous phone segmentation of one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedUtterance {
    pub id: String,
    pub speaker: String,
    pub entries: Vec<PhoneEntry>,
}

impl AlignedUtterance {
    pub fn duration(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.end)
    }

    /// Index of the entry covering time `t`; times past the end map to the
    /// last entry.
    pub fn entry_at(&self, t: f64) -> usize {
        let i = self.entries.partition_point(|e| e.end <= t);
        i.min(self.entries.len() - 1)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|e| format!("{}\t{:.6}\t{:.6}\n", e.phone, e.start, e.end)).collect()
    }
}

/// Parses `phone start end` lines (tab or space separated, seconds).
pub fn parse_alignment_str(text: &str, id: &str, speaker: &str) -> Result<AlignedUtterance> {
    let mut entries: Vec<PhoneEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Alignment { line: line_no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| err(format!("unparseable time {s:?}")));
        let (mut start, end) = (parse(fields[1])?, parse(fields[2])?);
        if !start.is_finite() || !end.is_finite() || start < 0.0 {
            return Err(err("times must be finite and non-negative".into()));
        }
        if end <= start {
            return Err(err(format!("end {end} does not follow start {start}")));
        }
        if let Some(prev) = entries.last() {
            if start < prev.end - 1e-9 {
                return Err(err(format!("overlaps previous entry ending at {}", prev.end)));
            }
            if start > prev.end + MAX_GAP_SECONDS + 1e-9 {
                return Err(err(format!("gap of {:.4} s after previous entry", start - prev.end)));
            }
            start = prev.end;
        }
        entries.push(PhoneEntry { phone: fields[0].to_string(), start, end });
    }
    if entries.is_empty() {
        return Err(Error::Alignment { line: 0, message: "no entries".into() });
    }
    Ok(AlignedUtterance { id: id.to_string(), speaker: speaker.to_string(), entries })
}

/// Reads an alignment file; the utterance id is the file stem and the
/// speaker id the name of the containing directory.
pub fn parse_alignment(path: &Path) -> Result<AlignedUtterance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let speaker = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_alignment_str(&text, &id, &speaker)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_entries() {
        let u = parse_alignment_str("sil 0.0 0.1\nae\t0.1\t0.25\nsil 0.25 0.3\n", "u", "s").unwrap();
        assert_eq!(u.entries.len(), 3);
        assert!((u.duration() - 0.3).abs() < 1e-12);
        assert_eq!(u.entry_at(0.1), 1);
        assert_eq!(u.entry_at(5.0), 2);
    }

    #[test]
    fn reports_line_of_each_fault() {
        let line_of = |text: &str| match parse_alignment_str(text, "u", "s") {
            Err(Error::Alignment { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line_of("a 0 0.2\nb 0.15 0.3\n"), 2);
        assert_eq!(line_of("a 0 0.2\nb 0.25 0.3\n"), 2);
        assert_eq!(line_of("a 0 0.2\nb 0.2 0.1\n"), 2);
        assert_eq!(line_of("a 0 0.2\nb x 0.3\n"), 2);
        assert_eq!(line_of("a 0 0.2 9\n"), 1);
        assert_eq!(line_of(""), 0);
        let ok = parse_alignment_str("a 0 0.2\nb 0.2005 0.3\n", "u", "s").unwrap();
        assert_eq!(ok.entries[1].start, 0.2);
    }
}
