use contvoc::features::*;
use contvoc::model::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn two_layer(seed: u64, i: usize, h: usize, o: usize) -> Network<f64> {
    let spec = LayerSpec { input_dim: i, hidden: vec![(h, Activation::Tanh)], output_dim: o };
    let mut net = init_network::<f64>(&spec, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
    for l in &mut net.layers {
        l.bias = random_vec(l.fan_out, &mut rng);
    }
    net
}

fn loss_of(net: &Network<f64>, x: &[f64], t: &[f64], rows: usize) -> f64 {
    let y = net.forward(x, rows).unwrap();
    y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / rows as f64
}

#[test]
fn gradient_matches_central_differences() {
    let rows = 10;
    let h = 1e-5;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (i, hid, o) = (rng.random_range(2..7), rng.random_range(2..9), rng.random_range(1..5));
        let mut net = two_layer(seed, i, hid, o);
        let x = random_vec(rows * i, &mut rng);
        let t = random_vec(rows * o, &mut rng);
        let mut ws = Workspace::default();
        let mut g = Gradients::zeros(&net);
        let loss = net.backward(&x, &t, rows, &mut ws, &mut g);
        assert!((loss - loss_of(&net, &x, &t, rows)).abs() < 1e-12);
        let mut worst: f64 = 0.0;
        for l in 0..net.layers.len() {
            let n_w = net.layers[l].weights.len();
            for k in 0..n_w + net.layers[l].bias.len() {
                let analytic = if k < n_w { g.weights[l][k] } else { g.bias[l][k - n_w] };
                let param = |net: &mut Network<f64>| -> *mut f64 {
                    if k < n_w { &mut net.layers[l].weights[k] } else { &mut net.layers[l].bias[k - n_w] }
                };
                let p = param(&mut net);
                let orig = unsafe { *p };
                unsafe { *p = orig + h };
                let up = loss_of(&net, &x, &t, rows);
                let p = param(&mut net);
                unsafe { *p = orig - h };
                let down = loss_of(&net, &x, &t, rows);
                let p = param(&mut net);
                unsafe { *p = orig };
                let numeric = (up - down) / (2.0 * h);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst <= 1e-4, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn zero_network_outputs_zero() {
    let mut net = init_network::<f64>(&LayerSpec::uniform(5, 2, 8, 3), 3).unwrap();
    for l in &mut net.layers {
        l.weights.iter_mut().for_each(|w| *w = 0.0);
        l.bias.iter_mut().for_each(|b| *b = 0.0);
    }
    let x: Vec<f64> = (0..20).map(|v| v as f64 - 7.0).collect();
    assert!(net.forward(&x, 4).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn linear_layer_matches_naive_matmul() {
    let (i, o, rows) = (13, 7, 9);
    let spec = LayerSpec { input_dim: i, hidden: vec![], output_dim: o };
    let mut net = init_network::<f64>(&spec, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    net.layers[0].bias = random_vec(o, &mut rng);
    let x = random_vec(rows * i, &mut rng);
    let y = net.forward(&x, rows).unwrap();
    let w = &net.layers[0].weights;
    for r in 0..rows {
        for c in 0..o {
            let mut acc = net.layers[0].bias[c];
            for k in 0..i {
                acc += x[r * i + k] * w[k * o + c];
            }
            assert!((y[r * o + c] - acc).abs() <= 1e-12);
        }
    }
}

#[test]
fn tanh_layer_output_strictly_inside_unit_interval() {
    let spec = LayerSpec { input_dim: 4, hidden: vec![(16, Activation::Tanh)], output_dim: 16 };
    let mut net = init_network::<f64>(&spec, 1).unwrap();
    let out = &mut net.layers[1];
    out.weights.iter_mut().enumerate().for_each(|(k, w)| *w = if k / 16 == k % 16 { 1.0 } else { 0.0 });
    let x: Vec<f64> = (0..40).map(|v| (v as f64 - 20.0) * 0.25).collect();
    let y = net.forward(&x, 10).unwrap();
    assert!(y.iter().all(|&a| a > -1.0 && a < 1.0));
    assert!(y.iter().any(|&a| a.abs() > 0.5));
}

#[test]
fn init_is_glorot_bounded_and_deterministic() {
    let spec = LayerSpec::acoustic(23, 27);
    assert_eq!(spec.hidden.len(), 6);
    assert!(spec.hidden.iter().all(|&(w, a)| w == 1024 && a == Activation::Tanh));
    let a = init_network::<f32>(&spec, 11).unwrap();
    let b = init_network::<f32>(&spec, 11).unwrap();
    assert_eq!(a, b);
    for l in &a.layers {
        let bound = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt() as f32;
        assert!(l.weights.iter().all(|w| w.abs() <= bound));
        assert!(l.bias.iter().all(|&b| b == 0.0));
    }
    assert_ne!(a, init_network::<f32>(&spec, 12).unwrap());
}

#[test]
fn zero_width_layer_is_rejected() {
    let spec = LayerSpec { input_dim: 4, hidden: vec![(8, Activation::Tanh), (0, Activation::Tanh)], output_dim: 2 };
    assert!(init_network::<f64>(&spec, 0).is_err());
}

#[test]
fn forward_rejects_wrong_width() {
    let net = init_network::<f64>(&LayerSpec::uniform(5, 1, 4, 2), 0).unwrap();
    assert!(net.forward(&[0.0; 12], 3).is_err());
}

fn toy_dataset(rows: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_vec(rows * 3, &mut rng);
    let y = x.chunks(3).flat_map(|r| [r[0] * r[1], r[2].sin()]).collect();
    Dataset::new(x, y, 3, 2).unwrap()
}

#[test]
fn zero_learning_rate_leaves_parameters_bit_exact() {
    let mut net = init_network::<f64>(&LayerSpec::uniform(3, 2, 8, 2), 4).unwrap();
    let before = net.clone();
    let cfg = TrainConfig { batch_size: 7, ..TrainConfig::default() };
    sgd_epoch(&mut net, &toy_dataset(30, 1), &cfg, 0, 0.0, 0).unwrap();
    assert_eq!(net.layers, before.layers);
}

#[test]
fn single_sample_is_overfit() {
    let mut net = init_network::<f64>(&LayerSpec::uniform(3, 2, 16, 2), 4).unwrap();
    let data = toy_dataset(1, 2);
    let cfg = TrainConfig { batch_size: 1, lr: 0.05, lr_final: 0.05, epochs: 40, ..TrainConfig::default() };
    let log = fit(&mut net, &data, None, &cfg, 1.0, 0).unwrap();
    let losses: Vec<f64> = log.epochs.iter().map(|e| e.train_loss).collect();
    assert!(*losses.last().unwrap() < 1e-12, "final loss {}", losses.last().unwrap());
    for w in losses[1..].windows(2).filter(|w| w[0] > 1e-24) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn training_is_deterministic() {
    let cfg = TrainConfig { batch_size: 8, epochs: 5, ..TrainConfig::default() };
    let run = || {
        let mut net = init_network::<f32>(&LayerSpec::uniform(3, 2, 8, 2), 4).unwrap();
        let d = toy_dataset(50, 3);
        let d32 = Dataset::new(d.x.iter().map(|&v| v as f32).collect(), d.y.iter().map(|&v| v as f32).collect(), 3, 2).unwrap();
        fit(&mut net, &d32, None, &cfg, 1.0, 0).unwrap();
        net
    };
    assert_eq!(run().to_bytes(), run().to_bytes());
}

#[test]
fn huge_learning_rate_reports_non_finite_loss() {
    let mut net = init_network::<f64>(&LayerSpec::uniform(3, 1, 8, 2), 4).unwrap();
    let cfg = TrainConfig { batch_size: 4, ..TrainConfig::default() };
    let mut data = toy_dataset(40, 5);
    data.y.iter_mut().for_each(|v| *v *= 1e6);
    let mut failed = false;
    for epoch in 0..50 {
        if sgd_epoch(&mut net, &data, &cfg, epoch, 1e6, 0).is_err() {
            failed = true;
            break;
        }
    }
    assert!(failed);
}

#[test]
fn learning_rate_decays_linearly() {
    let cfg = TrainConfig::default();
    assert_eq!(cfg.lr_at(0), 0.02);
    assert!((cfg.lr_at(24) - 0.002).abs() < 1e-15);
    assert!((cfg.lr_at(12) - 0.011).abs() < 1e-15);
}

fn phone_utt(id: &str, speaker: &str, phones: &[&str], seconds: f64) -> AlignedUtterance {
    let text: String = phones
        .iter()
        .enumerate()
        .map(|(k, p)| format!("{p} {} {}\n", k as f64 * seconds, (k + 1) as f64 * seconds))
        .collect();
    parse_alignment_str(&text, id, speaker).unwrap()
}

#[test]
fn constant_duration_corpus_predicts_twenty_frames() {
    let phones = ["sil", "a", "b", "c", "d", "e"];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let utts: Vec<AlignedUtterance> = (0..20)
        .map(|k| {
            let seq: Vec<&str> = (0..6).map(|_| phones[rng.random_range(0..phones.len())]).collect();
            phone_utt(&format!("u{k}"), "s", &seq, 0.1)
        })
        .collect();
    let inv = PhoneInventory::from_utterances(&utts).unwrap();
    let pairs: Vec<_> = utts.iter().map(|u| duration_training_pair(u, &inv, CONTEXT).unwrap()).collect();
    assert!(pairs[0].outputs.data.iter().all(|&v| (v - 20f64.ln()).abs() < 1e-9));
    let cfg = TrainConfig { batch_size: 16, epochs: 10, ..TrainConfig::default() };
    let hidden = LayerSpec::duration(1).hidden;
    let (net, _) = train_duration_model::<f32>(&pairs, &[], &hidden, &cfg).unwrap();
    let probe = phone_utt("p", "s", &["a", "e", "sil", "c"], 0.05);
    for d in predict_durations(&net, &probe, &inv, CONTEXT).unwrap() {
        assert!((19..=21).contains(&d), "{d}");
    }
}

#[test]
fn duration_clamp_and_log_roundtrip() {
    assert_eq!(clamp_duration(0.2), 1);
    assert_eq!(clamp_duration(-3.0), 1);
    assert_eq!(clamp_duration(f64::NAN), 1);
    assert_eq!(clamp_duration(7.4), 7);
    for d in [1.0, 3.0, 20.0, 417.0] {
        assert!((f64::ln(d).exp() - d).abs() < 1e-9);
    }
}

fn speaker_corpus(speaker: &str, offset: f64, n: usize, seed: u64) -> (Vec<TrainingUtterance>, PhoneInventory) {
    let phones = ["sil", "a", "b", "c"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let utts: Vec<AlignedUtterance> = (0..n)
        .map(|k| {
            let seq: Vec<&str> = (0..5).map(|_| phones[rng.random_range(0..4)]).collect();
            phone_utt(&format!("{speaker}{k}"), speaker, &seq, 0.05)
        })
        .collect();
    let inv = PhoneInventory::new(phones).unwrap();
    let out = utts
        .iter()
        .map(|u| {
            let grid = contvoc::signal::FrameGrid::for_len((u.duration() * 16000.0) as usize, 16000, 25.0).unwrap();
            let inputs = encode_linguistic_features(u, &inv, &grid, CONTEXT).unwrap();
            let rows = (0..inputs.rows)
                .map(|r| {
                    let row = inputs.row(r);
                    let p = (0..inv.len()).find(|&j| row[2 * inv.len() + j] == 1.0).unwrap() as f64;
                    vec![p + offset, (p * 0.5).sin() - offset, row[inputs.cols - 3]]
                })
                .collect();
            TrainingUtterance {
                id: u.id.clone(),
                speaker: speaker.into(),
                inputs,
                outputs: FeatureMatrix::from_rows(rows, vec!["a".into(), "b".into(), "c".into()]),
            }
        })
        .collect();
    (out, inv)
}

#[test]
fn average_voice_needs_two_speakers() {
    let (train, _) = speaker_corpus("x", 0.0, 4, 1);
    let hidden = [(8, Activation::Tanh)];
    assert!(train_avm::<f64>(&train, &[], &hidden, &TrainConfig::default()).is_err());
}

#[test]
fn adaptation_improves_target_fit() {
    let mut pool = Vec::new();
    for (k, off) in [-1.0, 0.0, 1.0].iter().enumerate() {
        pool.extend(speaker_corpus(&format!("s{k}"), *off, 20, k as u64).0);
    }
    let hidden = [(32, Activation::Tanh), (32, Activation::Tanh)];
    let cfg = TrainConfig { batch_size: 16, epochs: 15, ..TrainConfig::default() };
    let (base, log) = train_avm::<f64>(&pool, &[], &hidden, &cfg).unwrap();
    assert!(log.last_loss().unwrap() < log.first_loss().unwrap());
    let (target, _) = speaker_corpus("t", 2.5, 24, 99);
    let (tr, va) = target.split_at(20);
    let acfg = AdaptConfig { train: TrainConfig { batch_size: 16, ..TrainConfig::default() }, ..AdaptConfig::default() };
    let (adapted, report) = adapt(&base, tr, va, &acfg).unwrap();
    assert!(report.after_val <= 0.9 * report.before_val, "{report:?}");
    assert_eq!(adapted.input_stats, base.input_stats);

    let bad = AdaptConfig { epochs: 0, ..AdaptConfig::default() };
    assert!(adapt(&base, tr, va, &bad).is_err());
    let mut wrong = tr.to_vec();
    wrong[0].outputs = FeatureMatrix::from_rows(vec![vec![0.0]; wrong[0].inputs.rows], vec!["x".into()]);
    assert!(matches!(adapt(&base, &wrong, va, &acfg), Err(contvoc::Error::SchemaMismatch(_))));
    assert!(adapt(&base, &[], va, &acfg).is_err());
}

#[test]
fn rebasing_output_stats_preserves_predictions() {
    let (train, _) = speaker_corpus("x", 0.0, 6, 1);
    let (other, _) = speaker_corpus("y", 3.0, 6, 2);
    let (mut net, _) = train_network::<f64>(&train, &[], &[(8, Activation::Tanh)], &TrainConfig { epochs: 2, ..TrainConfig::default() }).unwrap();
    let before = predict_raw(&net, &train[0].inputs).unwrap();
    let stats = compute_stats(other.iter().map(|u| &u.outputs), NormKind::MeanVar).unwrap();
    rebase_output_stats(&mut net, stats).unwrap();
    let after = predict_raw(&net, &train[0].inputs).unwrap();
    for (a, b) in before.data.iter().zip(&after.data) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn model_file_roundtrip() {
    let (train, _) = speaker_corpus("x", 0.0, 4, 1);
    let (net, _) = train_network::<f32>(&train, &[], &[(8, Activation::Tanh), (4, Activation::Linear)], &TrainConfig { epochs: 2, ..TrainConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.cvdn");
    net.save(&path).unwrap();
    let back = Network::<f32>::load(&path).unwrap();
    assert_eq!(back, net);
    assert_eq!(&std::fs::read(&path).unwrap()[..4], b"CVDN");
    let bytes = net.to_bytes();
    assert!(Network::<f32>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(Network::<f32>::from_bytes(&bad).is_err());
    let wide = Network::<f64>::from_bytes(&bytes).unwrap();
    assert_eq!(wide.cast::<f32>(), net);
}

#[test]
fn training_log_csv_header() {
    let (train, _) = speaker_corpus("x", 0.0, 4, 1);
    let (_, log) = train_network::<f32>(&train, &train, &[(4, Activation::Tanh)], &TrainConfig { epochs: 3, ..TrainConfig::default() }).unwrap();
    let csv = log.to_csv().unwrap();
    assert!(csv.starts_with("epoch,train_loss,val_loss\n"));
    assert_eq!(csv.lines().count(), 4);
}

fn acoustic_net(inv: &PhoneInventory) -> Network<f32> {
    let out_dim = OUTPUT_MGC + 25;
    let spec = LayerSpec { input_dim: acoustic_width(&inv, CONTEXT), hidden: vec![(16, Activation::Tanh)], output_dim: out_dim };
    let mut net = init_network::<f32>(&spec, 2).unwrap();
    let mut rows = vec![vec![0.0; out_dim]; 2];
    rows[0][OUTPUT_LF0] = 100f64.ln();
    rows[1][OUTPUT_LF0] = 200f64.ln();
    rows[0][OUTPUT_MVF] = 500.0;
    rows[1][OUTPUT_MVF] = 9000.0;
    for m in 0..25 {
        rows[1][OUTPUT_MGC + m] = 0.1;
    }
    let stats = compute_stats([&FeatureMatrix::from_rows(rows, output_columns(24))], NormKind::MeanVar).unwrap();
    net.output_stats = Some(stats);
    net.layers.last_mut().unwrap().weights.iter_mut().for_each(|w| *w *= 20.0);
    net
}

#[test]
fn predicted_streams_respect_contracts() {
    let u = phone_utt("p", "s", &["sil", "a", "b", "sil"], 0.12);
    let inv = PhoneInventory::from_utterances([&u]).unwrap();
    let net = acoustic_net(&inv);
    let cfg = PredictConfig::default();
    let p = predict_parameters(&net, None, &u, &inv, &cfg).unwrap();
    assert_eq!(p.n_frames(), 96);
    assert_eq!(p.f0.values.len(), p.n_frames());
    assert_eq!(p.mvf.values.len(), p.n_frames());
    assert_eq!(p.mgc.width(), 25);
    assert!(p.f0.values.iter().all(|&f| f > 0.0));
    assert!(p.mvf.values.iter().all(|&m| (800.0..=8000.0).contains(&m)));
    assert_eq!(predict_parameters(&net, None, &u, &inv, &cfg).unwrap(), p);

    let dspec = LayerSpec::uniform(duration_width(&inv, CONTEXT), 1, 4, 1);
    let mut dnet = init_network::<f32>(&dspec, 0).unwrap();
    dnet.layers.iter_mut().for_each(|l| l.weights.iter_mut().for_each(|w| *w = 0.0));
    dnet.layers[1].bias[0] = 5f32.ln();
    let timed = predict_parameters(&net, Some(&dnet), &u, &inv, &cfg).unwrap();
    assert_eq!(timed.n_frames(), 20);

    let short = LayerSpec::uniform(acoustic_width(&inv, CONTEXT), 1, 4, 10);
    let wrong = init_network::<f32>(&short, 0).unwrap();
    assert!(matches!(predict_parameters(&wrong, None, &u, &inv, &cfg), Err(contvoc::Error::SchemaMismatch(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_is_finite_and_shaped(seed in 0u64..1000, rows in 1usize..12, scale in 0.0f64..50.0) {
        let net = init_network::<f64>(&LayerSpec::uniform(6, 3, 10, 4), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = random_vec(rows * 6, &mut rng).into_iter().map(|v| v * scale).collect();
        let y = net.forward(&x, rows).unwrap();
        prop_assert_eq!(y.len(), rows * 4);
        prop_assert!(y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn file_roundtrip_any_topology(widths in proptest::collection::vec(1usize..12, 0..4), seed in 0u64..100) {
        let hidden = widths.iter().map(|&w| (w, Activation::Tanh)).collect();
        let net = init_network::<f32>(&LayerSpec { input_dim: 3, hidden, output_dim: 2 }, seed).unwrap();
        prop_assert_eq!(Network::<f32>::from_bytes(&net.to_bytes()).unwrap(), net);
    }
}
