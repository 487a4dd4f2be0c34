//! Project configuration: INI-style `key = value` sections, overridable key
//! by key from the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use contvoc::corpus::{CorpusKind, CorpusSpec};
use contvoc::evaluation::{EvalConfig, McdConfig, SpectrogramConfig};
use contvoc::model::{Activation, AdaptConfig, LayersToUpdate, PredictConfig, TrainConfig};
use contvoc::signal::{HOP_SECONDS, WORKING_RATE};
use contvoc::synthesis::{AnalysisConfig, SynthesisConfig};

/// Flat `section.key -> value` map in file order of precedence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub values: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses `[section]` headers, `key = value` lines and `#`/`;` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| anyhow!("line {}: unterminated section header", i + 1))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Applies `section.key=value` overrides.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| anyhow!("override {assignment:?} is not key=value"))?;
        self.values.insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
    pub duration_hidden_layers: usize,
    pub duration_hidden_width: usize,
    pub context: usize,
}

impl NetworkConfig {
    pub fn acoustic_hidden(&self) -> Vec<(usize, Activation)> {
        vec![(self.hidden_width, self.activation); self.hidden_layers]
    }

    pub fn duration_hidden(&self) -> Vec<(usize, Activation)> {
        vec![(self.duration_hidden_width, self.activation); self.duration_hidden_layers]
    }
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 6,
            hidden_width: 1024,
            activation: Activation::Tanh,
            duration_hidden_layers: 4,
            duration_hidden_width: 512,
            context: contvoc::features::CONTEXT,
        }
    }
}

/// Speaker roles of an average-voice and adaptation experiment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    /// Speakers pooled into the average voice; empty means every manifest
    /// speaker that is not an adaptation target.
    pub avm_speakers: Vec<String>,
    pub adapt_targets: Vec<String>,
    /// Expected number of average-voice speakers; 0 disables the check.
    pub avm_speaker_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathsConfig {
    pub corpus_root: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectConfig {
    pub sample_rate: u32,
    pub hop_ms: f64,
    pub seed: u64,
    pub jobs: usize,
    pub analysis: AnalysisConfig,
    pub synthesis: SynthesisConfig,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub adapt: AdaptConfig,
    pub corpus: CorpusSpec,
    pub experiment: ExperimentConfig,
    pub mcd: McdConfig,
    pub spectrogram: SpectrogramConfig,
    pub paths: PathsConfig,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            sample_rate: WORKING_RATE,
            hop_ms: HOP_SECONDS * 1000.0,
            seed: 1,
            jobs: 1,
            analysis: AnalysisConfig::default(),
            synthesis: SynthesisConfig::default(),
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            adapt: AdaptConfig::default(),
            corpus: CorpusSpec::default(),
            experiment: ExperimentConfig::default(),
            mcd: McdConfig::default(),
            spectrogram: SpectrogramConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow!("{key} = {v:?}: {e}"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("{key} = {v:?}: expected true or false"),
    }
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse_layers(key: &str, v: &str) -> Result<LayersToUpdate> {
    if v == "all" {
        return Ok(LayersToUpdate::All);
    }
    let k = v.strip_prefix("top-").ok_or_else(|| anyhow!("{key} = {v:?}: expected all or top-K"))?;
    Ok(LayersToUpdate::Top(parse(key, k)?))
}

fn parse_kind(key: &str, v: &str) -> Result<CorpusKind> {
    match v {
        "sentences" => Ok(CorpusKind::Sentences),
        "vowels" => Ok(CorpusKind::Vowels),
        _ => bail!("{key} = {v:?}: expected sentences or vowels"),
    }
}

fn optional_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl ProjectConfig {
    /// Defaults overlaid with every key of `raw`; unknown keys are errors.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut c = Self::default();
        for (key, v) in &raw.values {
            c.apply(key, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<()> {
        let a = &mut self.analysis;
        let s = &mut self.synthesis;
        match key {
            "project.seed" => self.seed = parse(key, v)?,
            "project.jobs" => self.jobs = parse(key, v)?,
            "project.sample_rate" => self.sample_rate = parse(key, v)?,
            "project.hop_ms" => self.hop_ms = parse(key, v)?,

            "paths.corpus_root" => self.paths.corpus_root = optional_path(v),
            "paths.model_dir" => self.paths.model_dir = optional_path(v),
            "paths.output_dir" => self.paths.output_dir = optional_path(v),

            "analysis.f0_floor" => a.f0.f0_floor = parse(key, v)?,
            "analysis.f0_ceil" => a.f0.f0_ceil = parse(key, v)?,
            "analysis.periodicity_threshold" => a.f0.periodicity_threshold = parse(key, v)?,
            "analysis.dip_threshold" => a.f0.dip_threshold = parse(key, v)?,
            "analysis.octave_tolerance" => a.f0.octave_tolerance = parse(key, v)?,
            "analysis.window_ms" => a.window_ms = parse(key, v)?,
            "analysis.mvf_floor" => {
                let f: f64 = parse(key, v)?;
                a.mvf.mvf_floor = f;
                s.mvf_floor = f;
            }
            "analysis.mgc_order" => a.mgc_order = parse(key, v)?,
            "analysis.alpha" => a.alpha = parse(key, v)?,
            "analysis.gamma" => a.gamma = parse(key, v)?,
            "analysis.prototype_length" => a.prototype.length = parse(key, v)?,
            "analysis.prototype_min_cycles" => a.prototype.min_cycles = parse(key, v)?,

            "synthesis.fft_len" => s.fft_len = parse(key, v)?,
            "synthesis.noise_seed" => s.noise_seed = parse(key, v)?,
            "synthesis.unvoiced_envelope" => s.unvoiced_envelope = parse(key, v)?,
            "synthesis.ola_window" => s.ola_window = parse(key, v)?,
            "synthesis.excitation_norm" => s.excitation_norm = parse(key, v)?,
            "synthesis.crossover_slope" => s.crossover_slope = parse(key, v)?,
            "synthesis.peak_limit" => s.peak_limit = parse(key, v)?,

            "network.hidden_layers" => self.network.hidden_layers = parse(key, v)?,
            "network.hidden_width" => self.network.hidden_width = parse(key, v)?,
            "network.activation" => self.network.activation = parse(key, v)?,
            "network.duration_hidden_layers" => self.network.duration_hidden_layers = parse(key, v)?,
            "network.duration_hidden_width" => self.network.duration_hidden_width = parse(key, v)?,
            "network.context" => self.network.context = parse(key, v)?,

            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.lr" => self.train.lr = parse(key, v)?,
            "train.lr_final" => self.train.lr_final = parse(key, v)?,
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "train.shuffle" => self.train.shuffle = parse_bool(key, v)?,

            "adapt.lr_scale" => self.adapt.lr_scale = parse(key, v)?,
            "adapt.epochs" => self.adapt.epochs = parse(key, v)?,
            "adapt.layers" => self.adapt.layers = parse_layers(key, v)?,

            "corpus.kind" => self.corpus.kind = parse_kind(key, v)?,
            "corpus.speakers" => self.corpus.speakers = parse(key, v)?,
            "corpus.utterances" => self.corpus.utterances = parse(key, v)?,
            "corpus.min_phones" => self.corpus.min_phones = parse(key, v)?,
            "corpus.max_phones" => self.corpus.max_phones = parse(key, v)?,
            "corpus.vowel_seconds" => self.corpus.vowel_seconds = parse(key, v)?,
            "corpus.train_fraction" => self.corpus.splits.train = parse(key, v)?,
            "corpus.dev_fraction" => self.corpus.splits.dev = parse(key, v)?,
            "corpus.test_fraction" => self.corpus.splits.test = parse(key, v)?,

            "experiment.avm_speakers" => self.experiment.avm_speakers = parse_list(v),
            "experiment.adapt_targets" => self.experiment.adapt_targets = parse_list(v),
            "experiment.avm_speaker_count" => self.experiment.avm_speaker_count = parse(key, v)?,

            "evaluation.mcd_scaling" => self.mcd.scaling = parse(key, v)?,
            "evaluation.mcd_skip_c0" => self.mcd.skip_c0 = parse_bool(key, v)?,
            "evaluation.mcd_coefficients" => {
                self.mcd.coefficients = if v.is_empty() || v == "all" { None } else { Some(parse(key, v)?) }
            }

            "spectrogram.fft_len" => self.spectrogram.fft_len = parse(key, v)?,
            "spectrogram.dynamic_range_db" => self.spectrogram.dynamic_range_db = parse(key, v)?,
            "spectrogram.zoom" => self.spectrogram.zoom = parse(key, v)?,

            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate != WORKING_RATE {
            bail!("project.sample_rate must be {WORKING_RATE}; inputs at other rates are resampled");
        }
        if (self.hop_ms - HOP_SECONDS * 1000.0).abs() > 1e-9 {
            bail!("project.hop_ms must be {}", HOP_SECONDS * 1000.0);
        }
        if self.jobs == 0 {
            bail!("project.jobs must be at least 1");
        }
        self.analysis.f0.validate()?;
        self.synthesis.validate(contvoc::FrameGrid::hop_for(self.sample_rate))?;
        self.train.validate()?;
        self.corpus.splits.validate()?;
        if self.network.hidden_layers == 0 || self.network.hidden_width == 0 {
            bail!("network.hidden_layers and network.hidden_width must be positive");
        }
        if self.network.duration_hidden_layers == 0 || self.network.duration_hidden_width == 0 {
            bail!("network.duration_hidden_layers and network.duration_hidden_width must be positive");
        }
        Ok(())
    }

    /// Training schedule with the project seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        AdaptConfig { train: self.train_config(), ..self.adapt.clone() }
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec { seed: self.seed, ..self.corpus.clone() }
    }

    pub fn predict_config(&self) -> PredictConfig {
        PredictConfig {
            context: self.network.context,
            sample_rate: self.sample_rate,
            window_ms: self.analysis.window_ms,
            mvf_floor: self.analysis.mvf.mvf_floor,
            order: self.analysis.mgc_order,
            alpha: self.analysis.alpha,
            gamma: self.analysis.gamma,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig { analysis: self.analysis.clone(), mcd: self.mcd }
    }
}
