use super::{AlignedUtterance, PhoneInventory};
use crate::error::Result;
use crate::signal::FrameGrid;

/// Context slots on each side of the current phone.
pub const CONTEXT: usize = 2;

/// Row-major matrix with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub columns: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, columns: Vec<String>) -> Self {
        let cols = columns.len();
        Self { rows, cols, data: vec![0.0; rows * cols], columns }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, columns: Vec<String>) -> Self {
        let cols = columns.len();
        assert!(rows.iter().all(|r| r.len() == cols));
        Self { rows: rows.len(), cols, data: rows.concat(), columns }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }
}

fn context_columns(inv: &PhoneInventory, context: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for d in -(context as isize)..=context as isize {
        for s in inv.symbols() {
            cols.push(format!("ctx[{d:+}]={s}"));
        }
    }
    cols
}

/// Writes the one-hot context block for phone `p` into `row`.
fn fill_context(row: &mut [f64], ids: &[usize], p: usize, context: usize, inv_len: usize) {
    for (slot, d) in (-(context as isize)..=context as isize).enumerate() {
        let q = p as isize + d;
        let id = if q < 0 || q >= ids.len() as isize { 0 } else { ids[q as usize] };
        row[slot * inv_len + id] = 1.0;
    }
}

pub fn acoustic_width(inv: &PhoneInventory, context: usize) -> usize {
    (2 * context + 1) * inv.len() + 3
}

pub fn duration_width(inv: &PhoneInventory, context: usize) -> usize {
    (2 * context + 1) * inv.len() + 1
}

/// Per-frame input features: context one-hots, fraction through the
/// phone, phone duration (s) and fraction through the utterance.
pub fn encode_linguistic_features(
    u: &AlignedUtterance,
    inv: &PhoneInventory,
    grid: &FrameGrid,
    context: usize,
) -> Result<FeatureMatrix> {
    let ids = u.entries.iter().map(|e| inv.index_of(&e.phone)).collect::<Result<Vec<_>>>()?;
    let mut columns = context_columns(inv, context);
    columns.extend(["phone_position", "phone_duration", "utterance_position"].map(String::from));
    let mut m = FeatureMatrix::new(grid.n_frames, columns);
    let total = u.duration();
    let block = (2 * context + 1) * inv.len();
    for i in 0..grid.n_frames {
        let t = grid.center(i) as f64 / grid.sample_rate as f64;
        let p = u.entry_at(t);
        let e = &u.entries[p];
        let row = m.row_mut(i);
        fill_context(row, &ids, p, context, inv.len());
        row[block] = ((t - e.start) / e.duration()).clamp(0.0, 1.0);
        row[block + 1] = e.duration();
        row[block + 2] = (t / total).clamp(0.0, 1.0);
    }
    Ok(m)
}

/// Per-phone input features: context one-hots and the phone midpoint as a
/// fraction of the utterance.
pub fn encode_duration_features(u: &AlignedUtterance, inv: &PhoneInventory, context: usize) -> Result<FeatureMatrix> {
    let ids = u.entries.iter().map(|e| inv.index_of(&e.phone)).collect::<Result<Vec<_>>>()?;
    let mut columns = context_columns(inv, context);
    columns.push("utterance_position".into());
    let mut m = FeatureMatrix::new(ids.len(), columns);
    let total = u.duration();
    let block = (2 * context + 1) * inv.len();
    for (p, e) in u.entries.iter().enumerate() {
        let row = m.row_mut(p);
        fill_context(row, &ids, p, context, inv.len());
        row[block] = (0.5 * (e.start + e.end) / total).clamp(0.0, 1.0);
    }
    Ok(m)
}

/// Duration of each phone in frames of `hop_seconds`.
pub fn duration_targets(u: &AlignedUtterance, hop_seconds: f64) -> Vec<f64> {
    u.entries.iter().map(|e| (e.duration() / hop_seconds).round()).collect()
}
