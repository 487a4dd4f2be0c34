use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use contvoc_cli::commands::{self, Outcome, TtsArgs, TtsInput};
use contvoc_cli::config::{ProjectConfig, RawConfig};

#[derive(Parser)]
#[command(name = "contvoc", version, about = "Continuous vocoder analysis, synthesis, training and evaluation")]
struct Cli {
    /// INI project file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides one key, e.g. `--set train.epochs=5`; repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    /// Project seed; also seeds the synthesis noise generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-utterance work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log only warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes a seeded synthetic corpus with alignments and a manifest.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        /// sentences or vowels.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        speakers: Option<usize>,
        #[arg(long)]
        utterances: Option<usize>,
    },
    /// Extracts lf0, MVF and MGC streams and per-speaker prototypes.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Renders a waveform from saved parameter streams.
    Synthesize {
        /// Stream stem, e.g. `params/spk01/spk01_001`.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        prototype: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analysis immediately followed by synthesis.
    Copysyn {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also writes the analysed streams into this directory.
        #[arg(long)]
        dump_params: Option<PathBuf>,
    },
    /// Trains the multi-speaker average-voice acoustic model.
    TrainAvm {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Trains the phone duration model.
    TrainDuration {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Fine-tunes an average-voice model to target speakers.
    Adapt {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Target speaker; repeatable. Defaults to experiment.adapt_targets.
        #[arg(long = "target")]
        targets: Vec<String>,
    },
    /// Synthesizes dev and test utterances of speakers for evaluation.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "speaker")]
        speakers: Vec<String>,
    },
    /// Text-to-speech from a phone string or an alignment file.
    Tts {
        #[arg(long)]
        acoustic: PathBuf,
        #[arg(long)]
        duration: Option<PathBuf>,
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long)]
        prototype: Option<PathBuf>,
        #[arg(long, conflicts_with = "alignment", required_unless_present = "alignment")]
        phones: Option<String>,
        #[arg(long)]
        alignment: Option<PathBuf>,
        #[arg(long)]
        use_oracle_durations: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dump_params: Option<PathBuf>,
    },
    /// Scores a `ref,syn,speaker,split` manifest into CSV and table reports.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Renders a PNG spectrogram, optionally with an MVF contour.
    Spectrogram {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        overlay_mvf: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ProjectConfig> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    if let Some(s) = cli.seed {
        raw.set(&format!("project.seed={s}"))?;
        raw.set(&format!("synthesis.noise_seed={s}"))?;
    }
    if let Some(j) = cli.jobs {
        raw.set(&format!("project.jobs={j}"))?;
    }
    if let Command::GenCorpus { kind, speakers, utterances, .. } = &cli.command {
        if let Some(k) = kind {
            raw.set(&format!("corpus.kind={k}"))?;
        }
        if let Some(n) = speakers {
            raw.set(&format!("corpus.speakers={n}"))?;
        }
        if let Some(n) = utterances {
            raw.set(&format!("corpus.utterances={n}"))?;
        }
    }
    for s in &cli.sets {
        raw.set(s)?;
    }
    ProjectConfig::from_raw(&raw)
}

fn dir_or(given: &Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    given.clone().or_else(|| fallback.clone()).ok_or_else(|| anyhow!("no {what} given on the command line or in [paths]"))
}

fn run(cli: &Cli, cfg: &ProjectConfig) -> Result<Outcome> {
    let p = &cfg.paths;
    match &cli.command {
        Command::GenCorpus { out, .. } => commands::gen_corpus(cfg, out),
        Command::Analyze { manifest, out } => commands::analyze_manifest(cfg, manifest, &dir_or(out, &p.output_dir, "output directory")?),
        Command::Synthesize { params, prototype, out } => commands::synthesize_params(cfg, params, prototype.as_deref(), out),
        Command::Copysyn { input, out, dump_params } => commands::copysyn(cfg, input, out, dump_params.as_deref()),
        Command::TrainAvm { manifest, params, model_dir } => {
            commands::train_avm_cmd(cfg, manifest, params, &dir_or(model_dir, &p.model_dir, "model directory")?)
        }
        Command::TrainDuration { manifest, model_dir } => {
            commands::train_duration_cmd(cfg, manifest, &dir_or(model_dir, &p.model_dir, "model directory")?)
        }
        Command::Adapt { base, manifest, params, out, targets } => {
            let out = dir_or(out, &p.model_dir, "output directory")?;
            commands::adapt_cmd(cfg, base, manifest, params, &out, targets)
        }
        Command::Predict { model, manifest, params, out, speakers } => {
            let out = dir_or(out, &p.output_dir, "output directory")?;
            commands::predict_cmd(cfg, model, manifest, params, &out, speakers)
        }
        Command::Tts { acoustic, duration, inventory, prototype, phones, alignment, use_oracle_durations, out, dump_params } => {
            let input = match (phones, alignment) {
                (Some(s), _) => TtsInput::Phones(s),
                (None, Some(a)) => TtsInput::Alignment(a),
                (None, None) => unreachable!("clap requires one input"),
            };
            let args = TtsArgs {
                acoustic,
                duration: duration.as_deref(),
                inventory: inventory.as_deref(),
                prototype: prototype.as_deref(),
                input,
                oracle_durations: *use_oracle_durations,
                out,
                dump_params: dump_params.as_deref(),
            };
            commands::tts(cfg, &args)
        }
        Command::Evaluate { manifest, out } => {
            let out = dir_or(out, &p.output_dir, "output directory")?;
            commands::evaluate_cmd(cfg, manifest, &out)
        }
        Command::Spectrogram { input, out, overlay_mvf } => {
            commands::spectrogram_cmd(cfg, input, out, overlay_mvf.as_deref().map(Path::new))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .format(|buf, r| writeln!(buf, "{} {:<5} {}", buf.timestamp_millis(), r.level(), r.args()))
        .init();
    let outcome = load_config(&cli).and_then(|cfg| {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global()?;
        run(&cli, &cfg)
    });
    match outcome {
        Ok(o) => ExitCode::from(o.exit_code() as u8),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
