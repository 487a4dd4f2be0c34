use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    #[default]
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "dev" => Ok(Self::Dev),
            "test" => Ok(Self::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split {s:?} (train, dev, test)"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Dev => "dev",
            Self::Test => "test",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.90, dev: 0.05, test: 0.05 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.train, self.dev, self.test].iter().all(|f| (0.0..=1.0).contains(f))
            && (self.train + self.dev + self.test - 1.0).abs() < 1e-9
            && self.train > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "split fractions {}/{}/{} must be non-negative, sum to 1, with a non-empty train share",
                self.train, self.dev, self.test
            )));
        }
        Ok(())
    }

    /// Dev and test counts for `n` utterances; each non-zero share gets at
    /// least one utterance when `n >= 3`.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let take = |f: f64| {
            let c = (f * n as f64).round() as usize;
            if f > 0.0 && n >= 3 { c.max(1) } else { c }
        };
        let dev = take(self.dev);
        let test = take(self.test).min(n.saturating_sub(dev + 1));
        (n - dev - test, dev, test)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRow {
    pub id: String,
    pub speaker: String,
    /// Relative to the manifest root unless absolute.
    pub wav: PathBuf,
    pub alignment: PathBuf,
    pub split: Split,
}

/// Per speaker, in manifest order: train first, then dev, then test.
pub fn assign_splits(rows: &mut [ManifestRow], fr: &SplitFractions) {
    let mut speakers: Vec<String> = Vec::new();
    for r in rows.iter() {
        if !speakers.contains(&r.speaker) {
            speakers.push(r.speaker.clone());
        }
    }
    for spk in speakers {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].speaker == spk).collect();
        let (train, dev, _) = fr.counts(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            rows[i].split = if k < train {
                Split::Train
            } else if k < train + dev {
                Split::Dev
            } else {
                Split::Test
            };
        }
    }
}

/// Utterance list with paths relative to `root`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl CorpusManifest {
    pub fn wav_path(&self, r: &ManifestRow) -> PathBuf {
        self.root.join(&r.wav)
    }

    pub fn alignment_path(&self, r: &ManifestRow) -> PathBuf {
        self.root.join(&r.alignment)
    }

    pub fn speakers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.speaker) {
                out.push(r.speaker.clone());
            }
        }
        out
    }

    pub fn select(&self, split: Split) -> impl Iterator<Item = &ManifestRow> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    /// Rows of the given speakers only.
    pub fn restricted(&self, speakers: &[String]) -> Self {
        Self { root: self.root.clone(), rows: self.rows.iter().filter(|r| speakers.contains(&r.speaker)).cloned().collect() }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(["id", "speaker", "wav", "alignment", "split"]).map_err(to_err)?;
        for r in &self.rows {
            w.write_record([
                r.id.as_str(),
                r.speaker.as_str(),
                &r.wav.to_string_lossy(),
                &r.alignment.to_string_lossy(),
                &r.split.to_string(),
            ])
            .map_err(to_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::signal::write_atomic_bytes(path, self.to_csv()?.as_bytes())
    }

    /// Parses a manifest; ids must be unique. Paths are not checked here.
    pub fn parse(text: &str, root: &Path) -> Result<Self> {
        let bad = |r: String| Error::malformed("corpus manifest", r);
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name:?}")));
        let (ii, si, wi, ai) = (col("id")?, col("speaker")?, col("wav")?, col("alignment")?);
        let pi = headers.iter().position(|h| h == "split");
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for (k, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("row {} is short", k + 2)));
            let id = field(ii)?.to_string();
            if !seen.insert(id.clone()) {
                return Err(bad(format!("duplicate id {id:?}")));
            }
            rows.push(ManifestRow {
                id,
                speaker: field(si)?.to_string(),
                wav: PathBuf::from(field(wi)?),
                alignment: PathBuf::from(field(ai)?),
                split: match pi {
                    Some(i) => field(i)?.parse()?,
                    None => Split::Train,
                },
            });
        }
        Ok(Self { root: root.to_path_buf(), rows })
    }

    /// Loads a manifest whose relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Fails on the first row whose files are missing.
    pub fn check_paths(&self) -> Result<()> {
        for r in &self.rows {
            for p in [self.wav_path(r), self.alignment_path(r)] {
                if !p.is_file() {
                    return Err(Error::NotFound(p));
                }
            }
        }
        Ok(())
    }
}
