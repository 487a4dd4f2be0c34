use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use contvoc::corpus::{generate_corpus, CorpusManifest, ManifestRow, Split};
use contvoc::evaluation::{load_eval_manifest, render_spectrogram, score_entry, EvalReport};
use contvoc::excitation::{build_residual_prototype_pooled, MvfTrack, PrototypeSource, ResidualPrototype};
use contvoc::features::{acoustic_width, parse_alignment, parse_alignment_str, AlignedUtterance, PhoneEntry, PhoneInventory};
use contvoc::model::{
    acoustic_training_pair, adapt, duration_training_pair, predict_parameters, train_avm, train_duration_model,
    Network, TrainingUtterance, OUTPUT_MGC,
};
use contvoc::signal::{read_stream, read_wav, write_atomic, write_wav};
use contvoc::synthesis::{analyze, copy_synthesis, synthesize, Analysis, ParamTrack};
use contvoc::{FrameGrid, Waveform};
use rayon::prelude::*;

use crate::config::ProjectConfig;

pub const PROTOTYPE_FILE: &str = "prototype.bin";
pub const PHONES_FILE: &str = "phones.txt";
pub const AVM_FILE: &str = "avm.cvdn";
pub const DURATION_FILE: &str = "duration.cvdn";

type Net = Network<f32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Partial { failed: usize, total: usize },
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Success => 0,
            Self::Partial { .. } => 2,
        }
    }
}

/// Success, partial success, or an error when nothing succeeded.
fn batch_outcome(what: &str, failed: usize, total: usize) -> Result<Outcome> {
    if total > 0 && failed == total {
        bail!("{what}: all {total} items failed");
    }
    if failed > 0 {
        log::warn!("{what}: {failed} of {total} items failed");
        return Ok(Outcome::Partial { failed, total });
    }
    Ok(Outcome::Success)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

/// `(dir, stem)` of a parameter-track path, with or without a stream extension.
pub fn split_stem(path: &Path) -> Result<(PathBuf, String)> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let stem_path = if matches!(ext, "lf0" | "mvf" | "mgc") { path.with_extension("") } else { path.to_path_buf() };
    let stem = stem_path
        .file_name()
        .ok_or_else(|| anyhow!("{} names no parameter track", path.display()))?
        .to_string_lossy()
        .into_owned();
    let dir = stem_path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((dir, stem))
}

fn load_params(path: &Path) -> Result<ParamTrack> {
    let (dir, stem) = split_stem(path)?;
    ParamTrack::load(&dir, &stem).with_context(|| format!("loading parameters {}", path.display()))
}

fn load_prototype(path: Option<&Path>, params_dir: &Path, len: usize) -> Result<ResidualPrototype> {
    if let Some(p) = path {
        return ResidualPrototype::load(p).with_context(|| format!("loading prototype {}", p.display()));
    }
    let beside = params_dir.join(PROTOTYPE_FILE);
    if beside.exists() {
        return ResidualPrototype::load(&beside).with_context(|| format!("loading prototype {}", beside.display()));
    }
    log::warn!("no prototype given or found in {}; using an impulse", params_dir.display());
    Ok(ResidualPrototype::impulse(len))
}

fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    CorpusManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

pub fn gen_corpus(cfg: &ProjectConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.corpus_spec();
    let m = generate_corpus(out, &spec).with_context(|| format!("generating corpus in {}", out.display()))?;
    log::info!("wrote {} utterances of {} speakers to {}", m.rows.len(), m.speakers().len(), out.display());
    Ok(Outcome::Success)
}

/// Streams per utterance under `out/<speaker>/` plus one pooled prototype per speaker.
pub fn analyze_manifest(cfg: &ProjectConfig, manifest: &Path, out: &Path) -> Result<Outcome> {
    let m = load_manifest(manifest)?;
    let results: Vec<Result<(Waveform, Analysis)>> = m
        .rows
        .par_iter()
        .map(|r| {
            let path = m.wav_path(r);
            let run = || -> Result<(Waveform, Analysis)> {
                let w = read_wav(&path)?.to_working_rate();
                let a = analyze(&w, &cfg.analysis)?;
                let dir = out.join(&r.speaker);
                ensure_dir(&dir)?;
                a.params.save(&dir, &r.id)?;
                Ok((w, a))
            };
            run().map_err(|e| {
                log::error!("{}: {e:#}", path.display());
                e
            })
        })
        .collect();
    let mut failed = results.iter().filter(|r| r.is_err()).count();
    let mut total = m.rows.len();
    for spk in m.speakers() {
        let sources: Vec<PrototypeSource<'_>> = m
            .rows
            .iter()
            .zip(&results)
            .filter(|(r, _)| r.speaker == spk)
            .filter_map(|(_, res)| res.as_ref().ok())
            .map(|(w, a)| PrototypeSource { wave: w, gcis: &a.gcis, f0: &a.params.f0 })
            .collect();
        total += 1;
        if sources.is_empty() {
            failed += 1;
            continue;
        }
        let path = out.join(&spk).join(PROTOTYPE_FILE);
        match build_residual_prototype_pooled(&sources, &cfg.analysis.prototype).and_then(|p| p.save(&path)) {
            Ok(()) => log::info!("prototype for {spk} from {} utterances", sources.len()),
            Err(e) => {
                log::error!("{}: {e}", path.display());
                failed += 1;
            }
        }
    }
    batch_outcome("analyze", failed, total)
}

pub fn synthesize_params(cfg: &ProjectConfig, params: &Path, prototype: Option<&Path>, out: &Path) -> Result<Outcome> {
    let p = load_params(params)?;
    let (dir, _) = split_stem(params)?;
    let proto = load_prototype(prototype, &dir, cfg.analysis.prototype.length)?;
    let w = synthesize(&p, &proto, &cfg.synthesis)?;
    ensure_parent(out)?;
    write_wav(out, &w).with_context(|| format!("writing {}", out.display()))?;
    log::info!("synthesized {:.2} s to {}", w.duration(), out.display());
    Ok(Outcome::Success)
}

pub fn copysyn(cfg: &ProjectConfig, input: &Path, out: &Path, dump_params: Option<&Path>) -> Result<Outcome> {
    let w = read_wav(input).with_context(|| format!("reading {}", input.display()))?;
    let (y, params) = copy_synthesis(&w, &cfg.analysis, &cfg.synthesis)?;
    ensure_parent(out)?;
    write_wav(out, &y).with_context(|| format!("writing {}", out.display()))?;
    if let Some(dir) = dump_params {
        ensure_dir(dir)?;
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "copysyn".into());
        params.save(dir, &stem)?;
    }
    log::info!("copy synthesis of {} written to {}", input.display(), out.display());
    Ok(Outcome::Success)
}

/// Speakers of the average voice: the configured list, else every
/// manifest speaker that is not an adaptation target.
fn avm_speakers(cfg: &ProjectConfig, m: &CorpusManifest) -> Result<Vec<String>> {
    let all = m.speakers();
    let chosen: Vec<String> = if cfg.experiment.avm_speakers.is_empty() {
        all.iter().filter(|s| !cfg.experiment.adapt_targets.contains(s)).cloned().collect()
    } else {
        for s in &cfg.experiment.avm_speakers {
            if !all.contains(s) {
                bail!("average-voice speaker {s} is not in the manifest");
            }
        }
        cfg.experiment.avm_speakers.clone()
    };
    let n = cfg.experiment.avm_speaker_count;
    if n > 0 && chosen.len() != n {
        log::warn!("average voice uses {} speakers, configuration expects {n}", chosen.len());
    }
    Ok(chosen)
}

fn load_alignment(m: &CorpusManifest, r: &ManifestRow) -> Result<AlignedUtterance> {
    let path = m.alignment_path(r);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    parse_alignment_str(&text, &r.id, &r.speaker).with_context(|| format!("parsing {}", path.display()))
}

/// Training pairs for `rows`; failures are logged and counted.
fn collect_pairs<F>(m: &CorpusManifest, rows: &[&ManifestRow], make: F) -> (Vec<TrainingUtterance>, usize)
where
    F: Fn(&ManifestRow, AlignedUtterance) -> Result<TrainingUtterance> + Sync,
{
    let results: Vec<Result<TrainingUtterance>> = rows
        .par_iter()
        .map(|r| {
            load_alignment(m, r).and_then(|u| make(r, u)).map_err(|e| {
                log::error!("{}: {e:#}", r.id);
                e
            })
        })
        .collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    (results.into_iter().filter_map(Result::ok).collect(), failed)
}

fn rows_of<'a>(m: &'a CorpusManifest, speakers: &[String], split: Split) -> Vec<&'a ManifestRow> {
    m.rows.iter().filter(|r| r.split == split && speakers.contains(&r.speaker)).collect()
}

fn acoustic_pairs(
    cfg: &ProjectConfig,
    m: &CorpusManifest,
    rows: &[&ManifestRow],
    params_dir: &Path,
    inv: &PhoneInventory,
) -> (Vec<TrainingUtterance>, usize) {
    let pc = cfg.predict_config();
    collect_pairs(m, rows, |r, u| {
        let p = ParamTrack::load(&params_dir.join(&r.speaker), &r.id)?;
        Ok(acoustic_training_pair(&u, &p, inv, &pc)?)
    })
}

/// Inventory over every alignment of `speakers`.
fn build_inventory(m: &CorpusManifest, speakers: &[String]) -> Result<PhoneInventory> {
    let mut utts = Vec::new();
    for r in m.rows.iter().filter(|r| speakers.contains(&r.speaker)) {
        match load_alignment(m, r) {
            Ok(u) => utts.push(u),
            Err(e) => log::error!("{}: {e:#}", r.id),
        }
    }
    Ok(PhoneInventory::from_utterances(&utts)?)
}

fn inventory_for(model_dir: &Path, m: &CorpusManifest, speakers: &[String]) -> Result<PhoneInventory> {
    let path = model_dir.join(PHONES_FILE);
    if path.exists() {
        return PhoneInventory::load(&path).with_context(|| format!("loading {}", path.display()));
    }
    let inv = build_inventory(m, speakers)?;
    inv.save(&path)?;
    Ok(inv)
}

pub fn train_avm_cmd(cfg: &ProjectConfig, manifest: &Path, params_dir: &Path, model_dir: &Path) -> Result<Outcome> {
    let m = load_manifest(manifest)?;
    let speakers = avm_speakers(cfg, &m)?;
    log::info!("average voice from {}", speakers.join(", "));
    ensure_dir(model_dir)?;
    let inv = inventory_for(model_dir, &m, &speakers)?;
    let train_rows = rows_of(&m, &speakers, Split::Train);
    let val_rows = rows_of(&m, &speakers, Split::Dev);
    let (train, f1) = acoustic_pairs(cfg, &m, &train_rows, params_dir, &inv);
    let (val, f2) = acoustic_pairs(cfg, &m, &val_rows, params_dir, &inv);
    let (net, log) = train_avm::<f32>(&train, &val, &cfg.network.acoustic_hidden(), &cfg.train_config())?;
    net.save(&model_dir.join(AVM_FILE))?;
    log.write_csv(&model_dir.join("avm_train_log.csv"))?;
    log::info!(
        "average voice trained on {} utterances, final loss {:.5}",
        train.len(),
        log.last_loss().unwrap_or(f64::NAN)
    );
    batch_outcome("train-avm", f1 + f2, train_rows.len() + val_rows.len())
}

pub fn train_duration_cmd(cfg: &ProjectConfig, manifest: &Path, model_dir: &Path) -> Result<Outcome> {
    let m = load_manifest(manifest)?;
    let speakers = avm_speakers(cfg, &m)?;
    ensure_dir(model_dir)?;
    let inv = inventory_for(model_dir, &m, &speakers)?;
    let ctx = cfg.network.context;
    let train_rows = rows_of(&m, &speakers, Split::Train);
    let val_rows = rows_of(&m, &speakers, Split::Dev);
    let (train, f1) = collect_pairs(&m, &train_rows, |_, u| Ok(duration_training_pair(&u, &inv, ctx)?));
    let (val, f2) = collect_pairs(&m, &val_rows, |_, u| Ok(duration_training_pair(&u, &inv, ctx)?));
    let (net, log) = train_duration_model::<f32>(&train, &val, &cfg.network.duration_hidden(), &cfg.train_config())?;
    net.save(&model_dir.join(DURATION_FILE))?;
    log.write_csv(&model_dir.join("duration_train_log.csv"))?;
    batch_outcome("train-duration", f1 + f2, train_rows.len() + val_rows.len())
}

/// Differences between what a network expects and what this configuration
/// and inventory would feed it; empty when compatible.
fn schema_diff(net: &Net, inv: &PhoneInventory, cfg: &ProjectConfig, phones: &BTreeSet<String>) -> Vec<String> {
    let mut diff = Vec::new();
    let want_in = acoustic_width(inv, cfg.network.context);
    if net.input_dim() != want_in {
        diff.push(format!("input width: model {} vs features {want_in}", net.input_dim()));
    }
    let want_out = OUTPUT_MGC + cfg.analysis.mgc_order + 1;
    if net.output_dim() != want_out {
        diff.push(format!("output width: model {} vs streams {want_out}", net.output_dim()));
    }
    let missing: Vec<&str> =
        phones.iter().filter(|p| inv.index_of(p).is_err()).map(String::as_str).collect();
    if !missing.is_empty() {
        diff.push(format!("phones absent from model inventory: {}", missing.join(" ")));
    }
    diff
}

fn model_inventory(model: &Path) -> Result<PhoneInventory> {
    let path = model.parent().unwrap_or(Path::new(".")).join(PHONES_FILE);
    PhoneInventory::load(&path).with_context(|| format!("loading inventory {}", path.display()))
}

/// Fine-tunes the base model on each target; writes `<target>.cvdn`,
/// its training log and a before/after report into `out_dir`.
pub fn adapt_cmd(
    cfg: &ProjectConfig,
    base: &Path,
    manifest: &Path,
    params_dir: &Path,
    out_dir: &Path,
    targets: &[String],
) -> Result<Outcome> {
    let m = load_manifest(manifest)?;
    let targets = if targets.is_empty() { cfg.experiment.adapt_targets.clone() } else { targets.to_vec() };
    if targets.is_empty() {
        bail!("no adaptation target given");
    }
    let net = Net::load(base).with_context(|| format!("loading {}", base.display()))?;
    let inv = model_inventory(base)?;
    ensure_dir(out_dir)?;
    inv.save(&out_dir.join(PHONES_FILE))?;
    let mut failed = 0;
    for t in &targets {
        if let Err(e) = adapt_one(cfg, &net, &inv, &m, params_dir, out_dir, t) {
            log::error!("adapting to {t}: {e:#}");
            failed += 1;
        }
    }
    batch_outcome("adapt", failed, targets.len())
}

fn adapt_one(
    cfg: &ProjectConfig,
    net: &Net,
    inv: &PhoneInventory,
    m: &CorpusManifest,
    params_dir: &Path,
    out_dir: &Path,
    target: &str,
) -> Result<()> {
    let spk = [target.to_string()];
    let mut phones = BTreeSet::new();
    for r in m.rows.iter().filter(|r| r.speaker == target) {
        phones.extend(load_alignment(m, r)?.entries.into_iter().map(|e| e.phone));
    }
    if phones.is_empty() {
        bail!("speaker {target} has no utterances in the manifest");
    }
    let diff = schema_diff(net, inv, cfg, &phones);
    if !diff.is_empty() {
        bail!("feature schema mismatch:\n  {}", diff.join("\n  "));
    }
    let (train, f1) = acoustic_pairs(cfg, m, &rows_of(m, &spk, Split::Train), params_dir, inv);
    let (val, f2) = acoustic_pairs(cfg, m, &rows_of(m, &spk, Split::Dev), params_dir, inv);
    if f1 + f2 > 0 {
        log::warn!("{target}: {} utterances skipped", f1 + f2);
    }
    let (adapted, report) = adapt(net, &train, &val, &cfg.adapt_config())?;
    adapted.save(&out_dir.join(format!("{target}.cvdn")))?;
    report.log.write_csv(&out_dir.join(format!("{target}_adapt_log.csv")))?;
    let text = format!(
        "speaker,before_val_mse,after_val_mse\n{target},{:.6},{:.6}\n",
        report.before_val, report.after_val
    );
    write_atomic(&out_dir.join(format!("{target}_adapt_report.csv")), text.as_bytes())?;
    log::info!("{target}: validation MSE {:.5} -> {:.5}", report.before_val, report.after_val);
    Ok(())
}

pub enum TtsInput<'a> {
    Phones(&'a str),
    Alignment(&'a Path),
}

pub struct TtsArgs<'a> {
    pub acoustic: &'a Path,
    pub duration: Option<&'a Path>,
    pub inventory: Option<&'a Path>,
    pub prototype: Option<&'a Path>,
    pub input: TtsInput<'a>,
    pub oracle_durations: bool,
    pub out: &'a Path,
    pub dump_params: Option<&'a Path>,
}

/// Phone string with a nominal 100 ms per phone; timings come from the duration model.
fn phone_string_utterance(phones: &str) -> Result<AlignedUtterance> {
    let entries: Vec<PhoneEntry> = phones
        .split_whitespace()
        .enumerate()
        .map(|(i, p)| PhoneEntry { phone: p.to_string(), start: i as f64 * 0.1, end: (i + 1) as f64 * 0.1 })
        .collect();
    if entries.is_empty() {
        bail!("empty phone string");
    }
    Ok(AlignedUtterance { id: "tts".into(), speaker: "tts".into(), entries })
}

pub fn tts(cfg: &ProjectConfig, a: &TtsArgs<'_>) -> Result<Outcome> {
    let net = Net::load(a.acoustic).with_context(|| format!("loading {}", a.acoustic.display()))?;
    let inv = match a.inventory {
        Some(p) => PhoneInventory::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => model_inventory(a.acoustic)?,
    };
    let u = match a.input {
        TtsInput::Phones(s) => {
            if a.oracle_durations {
                bail!("--use-oracle-durations needs an alignment file");
            }
            phone_string_utterance(s)?
        }
        TtsInput::Alignment(p) => parse_alignment(p).with_context(|| format!("reading {}", p.display()))?,
    };
    for e in &u.entries {
        inv.index_of(&e.phone).with_context(|| format!("phone {:?} is not in the model inventory", e.phone))?;
    }
    let dur = if a.oracle_durations {
        None
    } else {
        let path = a.duration.ok_or_else(|| anyhow!("a duration model is required unless oracle durations are used"))?;
        Some(Net::load(path).with_context(|| format!("loading {}", path.display()))?)
    };
    let params = predict_parameters(&net, dur.as_ref(), &u, &inv, &cfg.predict_config())?;
    let proto_dir = a.acoustic.parent().unwrap_or(Path::new("."));
    let proto = load_prototype(a.prototype, proto_dir, cfg.analysis.prototype.length)?;
    let w = synthesize(&params, &proto, &cfg.synthesis)?;
    ensure_parent(a.out)?;
    write_wav(a.out, &w).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(dir) = a.dump_params {
        ensure_dir(dir)?;
        let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "tts".into());
        params.save(dir, &stem)?;
    }
    log::info!("synthesized {} frames ({:.2} s) to {}", params.n_frames(), w.duration(), a.out.display());
    Ok(Outcome::Success)
}

/// Synthesizes every dev and test utterance of `speakers` with oracle
/// durations and writes an evaluation manifest next to the outputs.
pub fn predict_cmd(
    cfg: &ProjectConfig,
    acoustic: &Path,
    manifest: &Path,
    params_dir: &Path,
    out_dir: &Path,
    speakers: &[String],
) -> Result<Outcome> {
    let m = load_manifest(manifest)?;
    let net = Net::load(acoustic).with_context(|| format!("loading {}", acoustic.display()))?;
    let inv = model_inventory(acoustic)?;
    let speakers = if speakers.is_empty() { cfg.experiment.adapt_targets.clone() } else { speakers.to_vec() };
    let rows: Vec<&ManifestRow> = m
        .rows
        .iter()
        .filter(|r| speakers.contains(&r.speaker) && matches!(r.split, Split::Dev | Split::Test))
        .collect();
    if rows.is_empty() {
        bail!("no dev or test utterances for {}", speakers.join(", "));
    }
    let pc = cfg.predict_config();
    let len = cfg.analysis.prototype.length;
    let results: Vec<Result<String>> = rows
        .par_iter()
        .map(|r| {
            let run = || -> Result<String> {
                let u = load_alignment(&m, r)?;
                let params = predict_parameters(&net, None, &u, &inv, &pc)?;
                let proto = load_prototype(None, &params_dir.join(&r.speaker), len)?;
                let w = synthesize(&params, &proto, &cfg.synthesis)?;
                let dir = out_dir.join(&r.speaker);
                ensure_dir(&dir)?;
                let out = dir.join(format!("{}.wav", r.id));
                write_wav(&out, &w)?;
                let reference = std::path::absolute(m.wav_path(r))?;
                let syn = std::path::absolute(&out)?;
                Ok(format!("{},{},{},{}\n", reference.display(), syn.display(), r.speaker, r.split))
            };
            run().map_err(|e| {
                log::error!("{}: {e:#}", r.id);
                e
            })
        })
        .collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    let mut text = String::from("ref,syn,speaker,split\n");
    text.extend(results.into_iter().filter_map(Result::ok));
    ensure_dir(out_dir)?;
    write_atomic(&out_dir.join("eval_manifest.csv"), text.as_bytes())?;
    batch_outcome("predict", failed, rows.len())
}

/// Scores an evaluation manifest into `report.csv` and `report.txt`.
pub fn evaluate_cmd(cfg: &ProjectConfig, manifest: &Path, out_dir: &Path) -> Result<Outcome> {
    let entries = load_eval_manifest(manifest).with_context(|| format!("loading {}", manifest.display()))?;
    let ec = cfg.eval_config();
    let records = entries.par_iter().map(|e| score_entry(e, &ec)).collect();
    let report = EvalReport::from_records(records);
    ensure_dir(out_dir)?;
    write_atomic(&out_dir.join("report.csv"), report.to_csv()?.as_bytes())?;
    let table = report.to_table();
    write_atomic(&out_dir.join("report.txt"), table.as_bytes())?;
    log::info!("evaluation of {} utterances:\n{table}", report.records.len());
    batch_outcome("evaluate", report.n_failed(), report.records.len())
}

pub fn spectrogram_cmd(cfg: &ProjectConfig, input: &Path, out: &Path, overlay: Option<&Path>) -> Result<Outcome> {
    let w = read_wav(input).with_context(|| format!("reading {}", input.display()))?.to_working_rate();
    let mvf = match overlay {
        Some(p) => Some(MvfTrack::new(
            read_stream(p).with_context(|| format!("reading MVF stream {}", p.display()))?,
            FrameGrid::hop_for(w.sample_rate),
        )),
        None => None,
    };
    ensure_parent(out)?;
    render_spectrogram(&w, &cfg.spectrogram, mvf.as_ref(), out)?;
    log::info!("spectrogram of {} written to {}", input.display(), out.display());
    Ok(Outcome::Success)
}
