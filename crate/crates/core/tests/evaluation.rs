mod common;

use std::f64::consts::PI;

use common::*;
use contvoc::evaluation::*;
use contvoc::excitation::{F0Track, MvfTrack};
use contvoc::signal::write_wav;
use contvoc::spectral::MgcTrack;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn track(data: Vec<f64>, order: usize) -> MgcTrack {
    MgcTrack::from_frames(data, order, 0.42, -1.0 / 3.0, 80, 16_000).unwrap()
}

fn all_coeffs() -> McdConfig {
    McdConfig { skip_c0: false, ..McdConfig::default() }
}

fn brute_mcd(x: &[f64], y: &[f64], width: usize, first: usize) -> f64 {
    let n = x.len() / width;
    let mut total = 0.0;
    for j in 0..n {
        let mut s = 0.0;
        for i in first..width {
            let d = x[j * width + i] - y[j * width + i];
            s += d * d;
        }
        total += s.sqrt();
    }
    total / n as f64
}

fn brute_corr(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn mcd_hand_example() {
    let x = track(vec![2.0, 5.0], 0);
    let y = track(vec![1.0, 7.0], 0);
    assert_eq!(mcd(&x, &y, &all_coeffs()).unwrap(), 1.5);
    assert_eq!(mcd(&x, &x, &McdConfig::default()).unwrap(), 0.0);
}

#[test]
fn mcd_standard_db_constant() {
    assert!((MCD_DB_SCALE - 10.0 * 2f64.sqrt() / 10f64.ln()).abs() < 1e-15);
    let x = track(vec![0.0, 0.0, 1.0, 1.0], 1);
    let y = track(vec![0.0, 3.0, 1.0, 1.0], 1);
    let cfg = McdConfig { scaling: McdScaling::StandardDb, ..McdConfig::default() };
    assert!((mcd(&x, &y, &cfg).unwrap() - 1.5 * MCD_DB_SCALE).abs() < 1e-12);
}

#[test]
fn mcd_matches_brute_force_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let data: Vec<f64> = (0..50 * 25).map(|_| rng.random_range(-3.0..3.0)).collect();
        let other: Vec<f64> = (0..50 * 25).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (x, y) = (track(data.clone(), 24), track(other.clone(), 24));
        let got = mcd(&x, &y, &McdConfig::default()).unwrap();
        let want = brute_mcd(&data, &other, 25, 1);
        assert!((got - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn mcd_coefficient_count_truncates_and_pads() {
    let x = track(vec![9.0, 1.0, 2.0, 0.0, 1.0, 2.0], 2);
    let y = track(vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0], 2);
    let two = McdConfig { coefficients: Some(2), ..McdConfig::default() };
    assert_eq!(mcd(&x, &y, &two).unwrap(), 0.0);
    let sixty = McdConfig { coefficients: Some(60), ..McdConfig::default() };
    assert_eq!(mcd(&x, &y, &sixty).unwrap(), mcd(&x, &y, &McdConfig::default()).unwrap());
}

#[test]
fn mcd_rejects_mismatch() {
    let x = track(vec![0.0; 6], 2);
    assert!(matches!(mcd(&x, &track(vec![0.0; 9], 2), &McdConfig::default()), Err(contvoc::Error::LengthMismatch { .. })));
    assert!(matches!(mcd(&x, &track(vec![0.0; 6], 1), &McdConfig::default()), Err(contvoc::Error::SchemaMismatch(_))));
    let empty = track(vec![], 2);
    assert!(mcd(&empty, &empty, &McdConfig::default()).is_err());
}

#[test]
fn f0_corr_examples() {
    let f = |v: &[f64]| F0Track::new(v.to_vec(), 80);
    let x = f(&[1.0, 2.0, 3.0]);
    assert_eq!(f0_corr(&x, &x).unwrap(), 1.0);
    assert_eq!(f0_corr(&x, &f(&[7.0, 5.0, 3.0])).unwrap(), -1.0);
    let want = 3.0 / (2f64.sqrt() * (14.0f64 / 3.0).sqrt());
    assert!((f0_corr(&x, &f(&[1.0, 2.0, 4.0])).unwrap() - want).abs() < 1e-12);
    assert!((want - 0.9820).abs() < 1e-4);
    assert!(matches!(f0_corr(&f(&[2.0, 2.0]), &f(&[3.0, 3.0])), Err(contvoc::Error::UndefinedCorrelation(_))));
    assert!(matches!(f0_corr(&x, &f(&[1.0, 2.0])), Err(contvoc::Error::LengthMismatch { .. })));
}

#[test]
fn f0_corr_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let n = rng.random_range(2..300);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(60.0..400.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(60.0..400.0)).collect();
        let got = pearson(&x, &y).unwrap();
        let want = brute_corr(&x, &y);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1e-3), "{got} {want}");
    }
}

#[test]
fn voiced_only_correlation_skips_zero_reference() {
    let r = F0Track::new(vec![0.0, 100.0, 0.0, 120.0, 140.0], 80);
    let p = F0Track::new(vec![500.0, 100.0, 1.0, 120.0, 140.0], 80);
    assert_eq!(f0_corr_voiced(&r, &p).unwrap(), 1.0);
    assert!(f0_corr(&r, &p).unwrap() < 0.9);
}

#[test]
fn alignment_truncates() {
    let a = F0Track::new(vec![1.0; 100], 80);
    let b = F0Track::new(vec![2.0; 103], 80);
    let (x, y, dropped) = align_tracks(&a, &b);
    assert_eq!((x.len(), y.len(), dropped), (100, 100, 3));
    let (x, y, dropped) = align_tracks(&a, &a);
    assert_eq!((&x, &y, dropped), (&a, &a, 0));
    let (x, _, _) = align_tracks(&F0Track::new(vec![], 80), &a);
    assert!(x.is_empty());
    let m = track(vec![1.0; 30], 2);
    let (t, _, d) = align_tracks(&m, &track(vec![1.0; 21], 2));
    assert_eq!((t.n_frames(), d), (7, 3));
}

#[test]
fn tone_spectrogram_has_single_ridge() {
    let w = wave((0..16_000).map(|i| (2.0 * PI * 1000.0 * i as f64 / 16_000.0).sin()).collect());
    let s = compute_spectrogram(&w, &SpectrogramConfig::default()).unwrap();
    assert_eq!(s.columns, 200);
    assert_eq!(s.bins, 513);
    let expected = 1000.0 * 1024.0 / 16_000.0;
    for c in 10..190 {
        assert!((s.argmax_bin(c) as f64 - expected).abs() <= 1.0);
    }
    assert!(s.db.iter().all(|&v| (-70.0..=0.0).contains(&v)));
}

#[test]
fn noise_spectrogram_is_spread() {
    let w = wave(white_noise(16_000, 0.3, 4));
    let (p, columns, _) = stft_power(&w, &SpectrogramConfig::default()).unwrap();
    let bins = 513;
    let mut total = 0.0;
    for c in 0..columns {
        let col = &p[c * bins..(c + 1) * bins];
        let mean = col.iter().sum::<f64>() / bins as f64;
        let max = col.iter().fold(0.0f64, |m, &v| m.max(v));
        total += 10.0 * (max / mean).log10();
    }
    assert!(total / columns as f64 <= 12.0);
}

#[test]
fn png_geometry_and_determinism() {
    let w = wave((0..8000).map(|i| (i as f64 * 0.3).sin()).collect());
    let dir = tempfile::tempdir().unwrap();
    let cfg = SpectrogramConfig { zoom: 2, ..SpectrogramConfig::default() };
    let mvf = MvfTrack::new(vec![4000.0; 100], 80);
    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    let s = render_spectrogram(&w, &cfg, Some(&mvf), &a).unwrap();
    render_spectrogram(&w, &cfg, Some(&mvf), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let dec = png::Decoder::new(std::io::BufReader::new(std::fs::File::open(&a).unwrap()));
    let reader = dec.read_info().unwrap();
    let info = reader.info();
    assert_eq!((info.width as usize, info.height as usize), (s.columns * 2, 513 * 2));
    let (rgb, _, h) = render_rgb(&s, Some(&mvf), 1);
    let row = ((1.0 - 0.5) * (h - 1) as f64).round() as usize;
    assert_eq!(&rgb[(row * s.columns + 5) * 3..(row * s.columns + 5) * 3 + 3], &[0, 255, 255]);
    assert!(render_spectrogram(&w, &cfg, None, &dir.path().join("missing/dir/x.png")).is_err());
}

fn glide(secs: f64, f_lo: f64, f_hi: f64) -> contvoc::Waveform {
    let n = (secs * 16_000.0) as usize;
    let mut phase = 0.0;
    wave(
        (0..n)
            .map(|i| {
                let f = f_lo + (f_hi - f_lo) * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos());
                phase = (phase + f / 16_000.0).fract();
                0.4 * (2.0 * phase - 1.0)
            })
            .collect(),
    )
}

#[test]
fn identity_corpus_scores_perfectly_and_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::from("ref,syn,speaker,split\n");
    for k in 0..8 {
        let name = format!("u{k}.wav");
        if k != 5 {
            write_wav(dir.path().join(&name), &glide(0.6, 100.0 + 10.0 * k as f64, 180.0)).unwrap();
        }
        let split = if k % 2 == 0 { "dev" } else { "test" };
        manifest.push_str(&format!("{name},{name},s{},{split}\n", k / 4));
    }
    let entries = parse_eval_manifest(&manifest, dir.path()).unwrap();
    let report = evaluate_corpus(&entries, &EvalConfig::default());
    assert_eq!(report.n_scored(), 7);
    assert_eq!(report.n_failed(), 1);
    assert!(report.records[5].error.is_some());
    for r in report.records.iter().filter(|r| r.error.is_none()) {
        assert_eq!(r.mcd_db, Some(0.0));
        assert_eq!(r.f0_corr, Some(1.0));
    }
    assert_eq!(report.aggregates.len(), 2);
    let table = report.to_table();
    assert!(table.contains("0.000 / 0.000"));
    assert!(table.contains("1.000 / 1.000"));
    assert_eq!(report.to_csv().unwrap().lines().count(), 9);
}

#[test]
fn aggregates_are_member_means() {
    let rec = |spk: &str, split, m: f64, c: f64| UtteranceScore {
        id: format!("{spk}{m}"),
        speaker: spk.into(),
        split,
        mcd_db: Some(m),
        f0_corr: Some(c),
        dropped_frames: 0,
        error: None,
    };
    let report = EvalReport::from_records(vec![
        rec("a", EvalSplit::Dev, 5.0, 0.7),
        rec("a", EvalSplit::Dev, 6.0, 0.8),
        rec("a", EvalSplit::Test, 4.0, 0.5),
        rec("a", EvalSplit::Test, 4.5, 0.6),
        rec("b", EvalSplit::Dev, 1.0, 0.1),
        rec("b", EvalSplit::Dev, 2.0, 0.2),
        rec("b", EvalSplit::Test, 3.0, 0.3),
        rec("b", EvalSplit::Test, 3.5, 0.4),
    ]);
    let close = |x: Option<f64>, y: f64| assert!((x.unwrap() - y).abs() < 1e-9);
    let (ad, at) = report.aggregates["a"];
    let (bd, bt) = report.aggregates["b"];
    close(ad.mcd_db, 5.5);
    close(at.mcd_db, 4.25);
    close(bd.mcd_db, 1.5);
    close(bt.mcd_db, 3.25);
    close(ad.f0_corr, 0.75);
    close(bt.f0_corr, 0.35);
    assert_eq!(ad.n, 2);
    let table = report.to_table();
    assert!(table.contains("5.500 / 4.250"));
    assert!(table.contains("0.150 / 0.350"));
}

#[test]
fn manifest_requires_known_split_and_columns() {
    let base = std::path::Path::new("/tmp");
    assert!(parse_eval_manifest("ref,syn,speaker,split\na.wav,b.wav,s,train\n", base).is_err());
    assert!(parse_eval_manifest("ref,syn,speaker\na.wav,b.wav,s\n", base).is_err());
    let e = parse_eval_manifest("ref,syn,speaker,split\na.wav,out/b,s,test\n", base).unwrap();
    assert_eq!(e[0].synthesized, base.join("out/b"));
    assert_eq!(e[0].id(), "a");
}

fn frames(n: usize, w: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, n * w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mcd_metric_properties((x, y, z) in (1usize..20).prop_flat_map(|n| (frames(n, 5), frames(n, 5), frames(n, 5)))) {
        let cfg = McdConfig::default();
        let d = |a: &[f64], b: &[f64]| mcd_frames(a, b, 5, &cfg).unwrap();
        prop_assert!(d(&x, &y) >= 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
    }

    #[test]
    fn mcd_scales_linearly(x in frames(8, 4), y in frames(8, 4), a in 0.0f64..10.0) {
        let cfg = McdConfig::default();
        let sx: Vec<f64> = x.iter().map(|v| v * a).collect();
        let sy: Vec<f64> = y.iter().map(|v| v * a).collect();
        let base = mcd_frames(&x, &y, 4, &cfg).unwrap();
        prop_assert!((mcd_frames(&sx, &sy, 4, &cfg).unwrap() - a * base).abs() <= 1e-9 * (1.0 + a * base));
    }

    #[test]
    fn correlation_affine_behaviour(
        x in proptest::collection::vec(50.0f64..300.0, 3..60),
        noise in proptest::collection::vec(-30.0f64..30.0, 60),
        a in 0.1f64..10.0,
        b in -100.0f64..100.0,
    ) {
        let y: Vec<f64> = x.iter().zip(&noise).map(|(v, n)| v + n).collect();
        prop_assume!(pearson(&x, &y).is_ok());
        let r = pearson(&x, &y).unwrap();
        let pos: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let neg: Vec<f64> = y.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson(&x, &pos).unwrap() - r).abs() < 1e-9);
        prop_assert!((pearson(&x, &neg).unwrap() + r).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&r));
    }
}
