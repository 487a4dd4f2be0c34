use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::metrics::{align_tracks, f0_corr, mcd, McdConfig};
use crate::error::{Error, Result};
use crate::signal::read_wav;
use crate::synthesis::{analyze, AnalysisConfig, ParamTrack};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvalSplit {
    Dev,
    Test,
}

impl FromStr for EvalSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dev" => Ok(Self::Dev),
            "test" => Ok(Self::Test),
            _ => Err(Error::InvalidArgument(format!("split must be dev or test, got {s:?}"))),
        }
    }
}

impl fmt::Display for EvalSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dev => "dev",
            Self::Test => "test",
        })
    }
}

/// One manifest row. `synthesized` is a WAV file or the stem path of a
/// saved parameter track (`dir/stem`, with or without a stream extension).
#[derive(Clone, Debug, PartialEq)]
pub struct EvalEntry {
    pub reference: PathBuf,
    pub synthesized: PathBuf,
    pub speaker: String,
    pub split: EvalSplit,
}

impl EvalEntry {
    pub fn id(&self) -> String {
        self.reference.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    }
}

/// Reads a `ref,syn,speaker,split` CSV; relative paths resolve against the
/// manifest's directory.
pub fn load_eval_manifest(path: &Path) -> Result<Vec<EvalEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_eval_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_eval_manifest(text: &str, base: &Path) -> Result<Vec<EvalEntry>> {
    let bad = |r: String| Error::malformed("evaluation manifest", r);
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name:?}")));
    let (ri, si, pi, li) = (col("ref")?, col("syn")?, col("speaker")?, col("split")?);
    let mut out = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("row {} is short", k + 2)));
        out.push(EvalEntry {
            reference: base.join(field(ri)?),
            synthesized: base.join(field(si)?),
            speaker: field(pi)?.to_string(),
            split: field(li)?.parse()?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub analysis: AnalysisConfig,
    pub mcd: McdConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { analysis: AnalysisConfig::default(), mcd: McdConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtteranceScore {
    pub id: String,
    pub speaker: String,
    pub split: EvalSplit,
    pub mcd_db: Option<f64>,
    pub f0_corr: Option<f64>,
    pub dropped_frames: usize,
    pub error: Option<String>,
}

fn load_synthesized(path: &Path, cfg: &AnalysisConfig) -> Result<ParamTrack> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("wav") {
        return Ok(analyze(&read_wav(path)?, cfg)?.params);
    }
    let stem_path = if matches!(ext, "lf0" | "mvf" | "mgc") { path.with_extension("") } else { path.to_path_buf() };
    let dir = stem_path.parent().unwrap_or(Path::new("."));
    let stem = stem_path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} names no parameter track", path.display())))?
        .to_string_lossy();
    ParamTrack::load(dir, &stem)
}

/// Both metrics for two parameter tracks, after truncation alignment.
pub fn score_tracks(reference: &ParamTrack, produced: &ParamTrack, cfg: &McdConfig) -> Result<(f64, f64, usize)> {
    let (a, b, dropped) = align_tracks(&reference.mgc, &produced.mgc);
    let m = mcd(&a, &b, cfg)?;
    let (fa, fb, _) = align_tracks(&reference.f0, &produced.f0);
    Ok((m, f0_corr(&fa, &fb)?, dropped))
}

/// Scores one manifest entry; failures are recorded, not raised.
pub fn score_entry(e: &EvalEntry, cfg: &EvalConfig) -> UtteranceScore {
    let mut s = UtteranceScore {
        id: e.id(),
        speaker: e.speaker.clone(),
        split: e.split,
        mcd_db: None,
        f0_corr: None,
        dropped_frames: 0,
        error: None,
    };
    let run = || -> Result<(f64, f64, usize)> {
        let reference = analyze(&read_wav(&e.reference)?, &cfg.analysis)?.params;
        let produced = load_synthesized(&e.synthesized, &cfg.analysis)?;
        score_tracks(&reference, &produced, &cfg.mcd)
    };
    match run() {
        Ok((m, c, d)) => {
            s.mcd_db = Some(m);
            s.f0_corr = Some(c);
            s.dropped_frames = d;
        }
        Err(err) => {
            log::warn!("{}: {err}", e.reference.display());
            s.error = Some(err.to_string());
        }
    }
    s
}

/// Means over the scored utterances of one speaker and split.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub mcd_db: Option<f64>,
    pub f0_corr: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub records: Vec<UtteranceScore>,
    /// speaker → (dev, test)
    pub aggregates: BTreeMap<String, (Cell, Cell)>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn cell(records: &[UtteranceScore], speaker: &str, split: EvalSplit) -> Cell {
    let members: Vec<&UtteranceScore> =
        records.iter().filter(|r| r.speaker == speaker && r.split == split && r.error.is_none()).collect();
    let mcds: Vec<f64> = members.iter().filter_map(|r| r.mcd_db).collect();
    let corrs: Vec<f64> = members.iter().filter_map(|r| r.f0_corr).collect();
    Cell { n: members.len(), mcd_db: mean(&mcds), f0_corr: mean(&corrs) }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

impl EvalReport {
    pub fn from_records(records: Vec<UtteranceScore>) -> Self {
        let mut aggregates = BTreeMap::new();
        for r in &records {
            if !aggregates.contains_key(&r.speaker) {
                let v = (cell(&records, &r.speaker, EvalSplit::Dev), cell(&records, &r.speaker, EvalSplit::Test));
                aggregates.insert(r.speaker.clone(), v);
            }
        }
        Self { records, aggregates }
    }

    pub fn n_failed(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn n_scored(&self) -> usize {
        self.records.len() - self.n_failed()
    }

    /// One row per utterance.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(["id", "speaker", "split", "mcd_db", "f0_corr", "dropped_frames", "status"]).map_err(to_err)?;
        for r in &self.records {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            let status = r.error.as_deref().map(|e| format!("error: {e}")).unwrap_or_else(|| "ok".into());
            w.write_record([
                r.id.clone(),
                r.speaker.clone(),
                r.split.to_string(),
                opt(r.mcd_db),
                opt(r.f0_corr),
                r.dropped_frames.to_string(),
                status,
            ])
            .map_err(to_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Per-speaker table with "dev / test" cells for both metrics.
    pub fn to_table(&self) -> String {
        let rows: Vec<[String; 3]> = self
            .aggregates
            .iter()
            .map(|(spk, (d, t))| {
                [
                    spk.clone(),
                    format!("{} / {}", fmt_opt(d.mcd_db), fmt_opt(t.mcd_db)),
                    format!("{} / {}", fmt_opt(d.f0_corr), fmt_opt(t.f0_corr)),
                ]
            })
            .collect();
        let head = ["Speaker".to_string(), "MCD (dB) dev / test".into(), "F0-CORR dev / test".into()];
        let widths: Vec<usize> =
            (0..3).map(|c| rows.iter().map(|r| r[c].len()).chain([head[c].len()]).max().unwrap_or(0)).collect();
        let line = |r: &[String; 3]| format!("{:<w0$}  {:>w1$}  {:>w2$}\n", r[0], r[1], r[2], w0 = widths[0], w1 = widths[1], w2 = widths[2]);
        let mut out = line(&head);
        out.push_str(&format!("{}\n", "-".repeat(widths.iter().sum::<usize>() + 4)));
        for r in &rows {
            out.push_str(&line(r));
        }
        out
    }
}

/// Scores every entry in order.
pub fn evaluate_corpus(entries: &[EvalEntry], cfg: &EvalConfig) -> EvalReport {
    EvalReport::from_records(entries.iter().map(|e| score_entry(e, cfg)).collect())
}
