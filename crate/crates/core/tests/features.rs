use contvoc::features::*;
use contvoc::signal::FrameGrid;
use proptest::prelude::*;

fn inv4() -> PhoneInventory {
    PhoneInventory::new(["sil", "ae", "t"]).unwrap()
}

fn utt(text: &str) -> AlignedUtterance {
    parse_alignment_str(text, "u1", "spk").unwrap()
}

fn grid_for(u: &AlignedUtterance) -> FrameGrid {
    let n = (u.duration() * 16_000.0).round() as usize;
    FrameGrid::for_len(n, 16_000, 25.0).unwrap()
}

#[test]
fn single_phone_width_and_edges() {
    let u = utt("ae 0 0.1\n");
    let inv = inv4();
    assert_eq!(inv.len(), 4);
    let m = encode_linguistic_features(&u, &inv, &grid_for(&u), CONTEXT).unwrap();
    assert_eq!(m.cols, 23);
    assert_eq!(m.rows, 20);
    let edge = inv.index_of(EDGE).unwrap();
    for r in m.row_iter() {
        for slot in [0, 1, 3, 4] {
            assert_eq!(r[slot * 4 + edge], 1.0);
        }
        for slot in 0..5 {
            assert_eq!(r[slot * 4..slot * 4 + 4].iter().sum::<f64>(), 1.0);
        }
    }
}

#[test]
fn phone_position_at_midpoint() {
    let u = utt("sil 0 0.1\nae 0.1 0.25\nsil 0.25 0.3\n");
    let m = encode_linguistic_features(&u, &inv4(), &grid_for(&u), CONTEXT).unwrap();
    // Frame 35 is centred at 0.175 s, the middle of "ae".
    let r = m.row(35);
    let dur = 0.15;
    assert!((r[20] - 0.5).abs() <= 0.0025 / dur + 1e-12);
    assert!((r[21] - dur).abs() < 1e-12);
}

#[test]
fn utterance_position_is_monotone() {
    let u = utt("sil 0 0.1\nae 0.1 0.25\nt 0.25 0.31\nsil 0.31 0.5\n");
    let m = encode_linguistic_features(&u, &inv4(), &grid_for(&u), CONTEXT).unwrap();
    let col: Vec<f64> = m.row_iter().map(|r| r[22]).collect();
    assert!(col.windows(2).all(|w| w[1] >= w[0]));
    assert!(col[0] < 0.01 && *col.last().unwrap() > 0.98);
}

#[test]
fn unknown_phone_is_reported() {
    let u = utt("zz 0 0.1\n");
    assert!(encode_linguistic_features(&u, &inv4(), &grid_for(&u), CONTEXT).is_err());
    assert!(encode_duration_features(&u, &inv4(), CONTEXT).is_err());
}

#[test]
fn duration_rows_targets_and_context() {
    let u = utt("t 0 0.1\nae 0.1 0.2\nt 0.2 0.35\n");
    let m = encode_duration_features(&u, &inv4(), CONTEXT).unwrap();
    assert_eq!(m.rows, 3);
    assert_eq!(m.cols, duration_width(&inv4(), CONTEXT));
    assert_eq!(duration_targets(&u, 0.005), vec![20.0, 20.0, 30.0]);
    // Both "t" phones differ only through their context.
    assert_ne!(m.row(0), m.row(2));
}

#[test]
fn degenerate_columns_are_flagged() {
    let m = FeatureMatrix::from_rows(vec![vec![5.0, 1.0], vec![5.0, 3.0]], vec!["a".into(), "b".into()]);
    for kind in [NormKind::MinMax, NormKind::MeanVar] {
        let s = compute_stats([&m], kind).unwrap();
        assert_eq!(s.degenerate, vec![true, false]);
        let mut n = m.clone();
        s.normalize(&mut n).unwrap();
        assert_eq!(n.row(0)[0], n.row(1)[0]);
        assert!(n.data.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn stats_file_roundtrip() {
    let m = FeatureMatrix::from_rows(vec![vec![1.0, -2.0], vec![4.0, 7.5]], vec!["a".into(), "b".into()]);
    let s = compute_stats([&m], NormKind::MeanVar).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.cvst");
    s.save(&p).unwrap();
    assert_eq!(NormStats::load(&p).unwrap(), s);
    std::fs::write(&p, b"CVSX").unwrap();
    assert!(NormStats::load(&p).is_err());
}

fn matrix() -> impl Strategy<Value = FeatureMatrix> {
    (1usize..6, 2usize..30).prop_flat_map(|(cols, rows)| {
        proptest::collection::vec(-1e3f64..1e3, rows * cols).prop_map(move |data| FeatureMatrix {
            rows,
            cols,
            data,
            columns: (0..cols).map(|j| format!("c{j}")).collect(),
        })
    })
}

proptest! {
    #[test]
    fn minmax_hits_targets_and_inverts(m in matrix()) {
        let s = compute_stats([&m], NormKind::MinMax).unwrap();
        let mut n = m.clone();
        s.normalize(&mut n).unwrap();
        for j in 0..m.cols {
            if s.degenerate[j] { continue; }
            let col: Vec<f64> = n.row_iter().map(|r| r[j]).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((lo - 0.01).abs() <= 1e-9 && (hi - 0.99).abs() <= 1e-9);
        }
        s.denormalize(&mut n).unwrap();
        for (a, b) in m.data.iter().zip(&n.data) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn meanvar_inverts(m in matrix()) {
        let s = compute_stats([&m], NormKind::MeanVar).unwrap();
        let mut n = m.clone();
        s.normalize(&mut n).unwrap();
        s.denormalize(&mut n).unwrap();
        for (a, b) in m.data.iter().zip(&n.data) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn encoding_width_is_fixed(n_phones in 1usize..8, seed in 0u64..1000) {
        let phones = ["sil", "ae", "t"];
        let mut text = String::new();
        let mut t = 0.0;
        for k in 0..n_phones {
            let d = 0.03 + 0.01 * ((seed as usize + k) % 7) as f64;
            text.push_str(&format!("{} {t} {}\n", phones[(seed as usize + k) % 3], t + d));
            t += d;
        }
        let u = utt(&text);
        let inv = inv4();
        let m = encode_linguistic_features(&u, &inv, &grid_for(&u), CONTEXT).unwrap();
        prop_assert_eq!(m.cols, acoustic_width(&inv, CONTEXT));
        let again = encode_linguistic_features(&u, &inv, &grid_for(&u), CONTEXT).unwrap();
        prop_assert_eq!(m, again);
    }
}
