//! Seeded formant pseudo-speakers: random phone strings rendered by a
//! Rosenberg glottal source through a cascade of time-varying resonators.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::manifest::{assign_splits, CorpusManifest, ManifestRow, SplitFractions};
use crate::error::{Error, Result};
use crate::features::{AlignedUtterance, PhoneEntry};
use crate::signal::{write_wav, Waveform, WORKING_RATE};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Class {
    Silence,
    Vowel,
    Nasal,
    Fricative,
    VoicedFricative,
}

struct PhoneDef {
    symbol: &'static str,
    class: Class,
    formants: [f64; 4],
    /// Mean duration in seconds.
    duration: f64,
}

const fn ph(symbol: &'static str, class: Class, formants: [f64; 4], duration: f64) -> PhoneDef {
    PhoneDef { symbol, class, formants, duration }
}

const PHONES: &[PhoneDef] = &[
    ph("sil", Class::Silence, [500.0, 1500.0, 2500.0, 3500.0], 0.12),
    ph("a", Class::Vowel, [730.0, 1090.0, 2440.0, 3400.0], 0.13),
    ph("e", Class::Vowel, [530.0, 1840.0, 2480.0, 3500.0], 0.11),
    ph("i", Class::Vowel, [270.0, 2290.0, 3010.0, 3700.0], 0.10),
    ph("o", Class::Vowel, [570.0, 840.0, 2410.0, 3300.0], 0.12),
    ph("u", Class::Vowel, [300.0, 870.0, 2240.0, 3300.0], 0.11),
    ph("ae", Class::Vowel, [660.0, 1720.0, 2410.0, 3500.0], 0.14),
    ph("m", Class::Nasal, [250.0, 1100.0, 2300.0, 3300.0], 0.07),
    ph("n", Class::Nasal, [250.0, 1600.0, 2600.0, 3400.0], 0.06),
    ph("s", Class::Fricative, [5500.0, 6500.0, 7200.0, 7600.0], 0.10),
    ph("f", Class::Fricative, [3000.0, 5000.0, 6500.0, 7400.0], 0.09),
    ph("z", Class::VoicedFricative, [4500.0, 6000.0, 7000.0, 7600.0], 0.08),
];

const BANDWIDTHS: [f64; 4] = [80.0, 110.0, 160.0, 250.0];
const TRANSITION: f64 = 0.03;
/// Standard deviation of the background noise added after normalisation.
const NOISE_FLOOR: f64 = 3e-4;

/// Phone symbols the generator can emit, silence first.
pub fn phone_symbols() -> Vec<&'static str> {
    PHONES.iter().map(|p| p.symbol).collect()
}

fn phone(symbol: &str) -> Result<&'static PhoneDef> {
    PHONES.iter().find(|p| p.symbol == symbol).ok_or_else(|| Error::UnknownPhone(symbol.to_string()))
}

/// Voice of one pseudo-speaker.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerProfile {
    pub id: String,
    pub f0_base: f64,
    /// Vocal-tract scaling of all formants.
    pub formant_scale: f64,
    /// Open quotient of the glottal pulse; larger is breathier and darker.
    pub open_quotient: f64,
    pub aspiration: f64,
    /// Duration multiplier.
    pub tempo: f64,
    pub seed: u64,
}

impl SpeakerProfile {
    pub fn random(id: &str, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let female = rng.random_bool(0.6);
        let (f0_base, formant_scale) =
            if female { (rng.random_range(180.0..240.0), rng.random_range(1.08..1.2)) } else { (rng.random_range(95.0..140.0), rng.random_range(0.88..1.0)) };
        Self {
            id: id.to_string(),
            f0_base,
            formant_scale,
            open_quotient: rng.random_range(0.45..0.7),
            aspiration: rng.random_range(0.01..0.04),
            tempo: rng.random_range(0.85..1.2),
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusKind {
    /// Random phone strings with alignments.
    Sentences,
    /// One sustained vowel per utterance with a gliding F0.
    Vowels,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub kind: CorpusKind,
    pub speakers: usize,
    pub utterances: usize,
    /// Phones per utterance, silence padding excluded.
    pub min_phones: usize,
    pub max_phones: usize,
    /// Length of each sustained vowel.
    pub vowel_seconds: f64,
    pub splits: SplitFractions,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            kind: CorpusKind::Sentences,
            speakers: 3,
            utterances: 50,
            min_phones: 4,
            max_phones: 8,
            vowel_seconds: 1.0,
            splits: SplitFractions::default(),
            seed: 1,
        }
    }
}

/// One rendered utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticUtterance {
    pub wave: Waveform,
    pub alignment: AlignedUtterance,
    /// True F0 per sample.
    pub f0: Vec<f64>,
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Per-sample blend between a phone's targets and its neighbours'.
fn blended(entries: &[(&PhoneDef, f64, f64)], t: f64, value: impl Fn(&PhoneDef) -> f64) -> f64 {
    let i = entries.partition_point(|e| e.2 <= t).min(entries.len() - 1);
    let (p, start, end) = entries[i];
    let here = value(p);
    if i > 0 && t < start + TRANSITION {
        let prev = value(entries[i - 1].0);
        let w = smoothstep(0.5 + (t - start) / (2.0 * TRANSITION));
        return prev + (here - prev) * w;
    }
    if i + 1 < entries.len() && t > end - TRANSITION {
        let next = value(entries[i + 1].0);
        let w = smoothstep(0.5 - (end - t) / (2.0 * TRANSITION));
        return here + (next - here) * w;
    }
    here
}

fn voicing(c: Class) -> f64 {
    match c {
        Class::Vowel => 1.0,
        Class::Nasal => 0.6,
        Class::VoicedFricative => 0.4,
        Class::Fricative | Class::Silence => 0.0,
    }
}

fn frication(c: Class) -> f64 {
    match c {
        Class::Fricative => 0.25,
        Class::VoicedFricative => 0.15,
        Class::Silence => 0.002,
        _ => 0.0,
    }
}

/// Rosenberg glottal flow derivative at phase `ph` in [0, 1).
fn glottal_derivative(ph: f64, open: f64) -> f64 {
    let tp = 0.7 * open;
    let tn = 0.3 * open;
    if ph < tp {
        0.5 * PI / tp * (PI * ph / tp).sin()
    } else if ph < tp + tn {
        -0.5 * PI / tn * (0.5 * PI * (ph - tp) / tn).sin()
    } else {
        0.0
    }
}

struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn step(&mut self, x: f64, freq: f64, bw: f64, sr: f64) -> f64 {
        let freq = freq.min(0.47 * sr);
        let r = (-PI * bw / sr).exp();
        let c = 2.0 * r * (2.0 * PI * freq / sr).cos();
        let gain = 1.0 - c + r * r;
        let y = gain * x + c * self.y1 - r * r * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Renders a phone sequence `(symbol, seconds)` for a speaker; `f0_shape`
/// maps relative time in [0, 1] to a multiplier of the speaker's base F0.
pub fn render(
    speaker: &SpeakerProfile,
    id: &str,
    phones: &[(&str, f64)],
    f0_shape: impl Fn(f64) -> f64,
    seed: u64,
) -> Result<SyntheticUtterance> {
    if phones.is_empty() {
        return Err(Error::InvalidArgument("no phones to render".into()));
    }
    let sr = WORKING_RATE as f64;
    let mut entries = Vec::with_capacity(phones.len());
    let mut t = 0.0;
    for &(sym, dur) in phones {
        let def = phone(sym)?;
        let end = ((t + dur) * 1000.0).round() / 1000.0;
        entries.push((def, t, end));
        t = end;
    }
    let total = t;
    let n = (total * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res: Vec<Resonator> = (0..4).map(|_| Resonator { y1: 0.0, y2: 0.0 }).collect();
    let mut fric: Vec<Resonator> = (0..2).map(|_| Resonator { y1: 0.0, y2: 0.0 }).collect();
    let mut phase = 0.0;
    let mut prev_noise = 0.0;
    let mut samples = Vec::with_capacity(n);
    let mut f0s = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let f0 = speaker.f0_base * f0_shape(t / total);
        f0s.push(f0);
        phase += f0 / sr;
        phase -= phase.floor();
        let v = blended(&entries, t, |p| voicing(p.class));
        let fr = blended(&entries, t, |p| frication(p.class));
        let white: f64 = rng.sample(StandardNormal);
        let hp_noise = white - prev_noise;
        prev_noise = white;
        let source = v * (glottal_derivative(phase, speaker.open_quotient) * 0.02 + speaker.aspiration * hp_noise);
        let mut y = source;
        for (k, r) in res.iter_mut().enumerate() {
            let f = blended(&entries, t, |p| p.formants[k]) * speaker.formant_scale;
            y = r.step(y, f, BANDWIDTHS[k] * speaker.formant_scale, sr);
        }
        let mut z = fr * white;
        for (k, r) in fric.iter_mut().enumerate() {
            let f = blended(&entries, t, |p| p.formants[k]) * speaker.formant_scale.sqrt();
            z = r.step(z, f, 900.0, sr);
        }
        samples.push(y + z);
    }
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = 0.7 / peak;
        samples.iter_mut().for_each(|v| *v *= g);
    }
    for v in samples.iter_mut() {
        *v += NOISE_FLOOR * rng.sample::<f64, _>(StandardNormal);
    }
    let alignment = AlignedUtterance {
        id: id.to_string(),
        speaker: speaker.id.clone(),
        entries: entries
            .iter()
            .map(|(p, s, e)| PhoneEntry { phone: p.symbol.to_string(), start: *s, end: *e })
            .collect(),
    };
    Ok(SyntheticUtterance { wave: Waveform::new(samples, WORKING_RATE)?, alignment, f0: f0s })
}

fn sentence(speaker: &SpeakerProfile, id: &str, spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Result<SyntheticUtterance> {
    let count = rng.random_range(spec.min_phones..=spec.max_phones);
    let mut phones: Vec<(&str, f64)> = vec![("sil", 0.1)];
    let mut last = "sil";
    for k in 0..count {
        let def = loop {
            let d = &PHONES[rng.random_range(1..PHONES.len())];
            let alternate = (k % 2 == 0) == (d.class == Class::Vowel) || rng.random_bool(0.25);
            if d.symbol != last && alternate {
                break d;
            }
        };
        let dur = def.duration * speaker.tempo * rng.random_range(0.8..1.25);
        phones.push((def.symbol, dur));
        last = def.symbol;
    }
    phones.push(("sil", 0.1));
    let phase0: f64 = rng.random_range(0.0..2.0 * PI);
    let rate = rng.random_range(0.5..1.5);
    let shape = move |x: f64| (1.0 - 0.15 * x) * (1.0 + 0.08 * (2.0 * PI * rate * x + phase0).sin());
    render(speaker, id, &phones, shape, rng.random())
}

fn sustained_vowel(speaker: &SpeakerProfile, id: &str, spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Result<SyntheticUtterance> {
    let vowels: Vec<&PhoneDef> = PHONES.iter().filter(|p| p.class == Class::Vowel).collect();
    let v = vowels[rng.random_range(0..vowels.len())].symbol;
    let phase0: f64 = rng.random_range(0.0..2.0 * PI);
    let depth = rng.random_range(0.12..0.25);
    let shape = move |x: f64| 1.0 + depth * (2.0 * PI * x + phase0).sin();
    render(speaker, id, &[(v, spec.vowel_seconds)], shape, rng.random())
}

/// Generates every utterance of a corpus in memory, speaker by speaker.
pub fn generate_utterances(spec: &CorpusSpec) -> Result<Vec<SyntheticUtterance>> {
    if spec.speakers == 0 || spec.utterances == 0 {
        return Err(Error::InvalidArgument("corpus needs at least one speaker and utterance".into()));
    }
    if spec.min_phones == 0 || spec.min_phones > spec.max_phones {
        return Err(Error::InvalidArgument("phone count range is empty".into()));
    }
    let mut out = Vec::with_capacity(spec.speakers * spec.utterances);
    for s in 0..spec.speakers {
        let speaker = speaker_profile(spec.seed, s);
        let mut rng = ChaCha8Rng::seed_from_u64(speaker.seed ^ 0x5eed);
        for u in 0..spec.utterances {
            let id = format!("{}_{:03}", speaker.id, u + 1);
            out.push(match spec.kind {
                CorpusKind::Sentences => sentence(&speaker, &id, spec, &mut rng)?,
                CorpusKind::Vowels => sustained_vowel(&speaker, &id, spec, &mut rng)?,
            });
        }
    }
    Ok(out)
}

/// Speaker `index` of the corpus seeded by `seed`.
pub fn speaker_profile(seed: u64, index: usize) -> SpeakerProfile {
    let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64 + 1);
    SpeakerProfile::random(&format!("spk{:02}", index + 1), s)
}

/// Writes `wav/<spk>/<id>.wav`, `lab/<spk>/<id>.lab` and `manifest.csv`
/// under `root`.
pub fn generate_corpus(root: &Path, spec: &CorpusSpec) -> Result<CorpusManifest> {
    spec.splits.validate()?;
    let utts = generate_utterances(spec)?;
    let mut rows = Vec::with_capacity(utts.len());
    for u in &utts {
        let spk = &u.alignment.speaker;
        let wav = Path::new("wav").join(spk).join(format!("{}.wav", u.alignment.id));
        let lab = Path::new("lab").join(spk).join(format!("{}.lab", u.alignment.id));
        for rel in [&wav, &lab] {
            let dir = root.join(rel.parent().expect("relative path has a parent"));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        write_wav(root.join(&wav), &u.wave)?;
        crate::signal::write_atomic_bytes(&root.join(&lab), u.alignment.to_text().as_bytes())?;
        rows.push(ManifestRow { id: u.alignment.id.clone(), speaker: spk.clone(), wav, alignment: lab, split: Default::default() });
    }
    assign_splits(&mut rows, &spec.splits);
    let manifest = CorpusManifest { root: root.to_path_buf(), rows };
    manifest.save(&root.join("manifest.csv"))?;
    Ok(manifest)
}
