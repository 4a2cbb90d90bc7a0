use dwtunnel::geometry::*;
use dwtunnel::husimi::HusimiSummary;
use dwtunnel::oned::separable_oracle_2d;
use dwtunnel::qsolver::*;
use dwtunnel::spectra::*;
use dwtunnel_testkit::spearman_naive;
use proptest::prelude::*;

fn summary(pair: usize, weighted: f64) -> HusimiSummary {
    HusimiSummary {
        pair,
        e_mean: 0.0,
        amp: weighted,
        p_norm: 1.0,
        weighted,
        flags: Vec::new(),
        grid: None,
    }
}

fn records(deltas: &[f64]) -> Vec<SplittingRecord> {
    let e: Vec<f64> = (0..deltas.len()).map(|k| 5.0 + 3.0 * k as f64).collect();
    let o: Vec<f64> = e.iter().zip(deltas).map(|(a, d)| a + d).collect();
    pair_states(&e, &o).unwrap()
}

#[test]
fn rank_correlation_examples() {
    let d: Vec<f64> = (0..12).map(|k| 1e-3 * (1.0 + k as f64)).collect();
    let r = records(&d);
    let up: Vec<HusimiSummary> = (0..12).map(|k| summary(k, k as f64)).collect();
    let down: Vec<HusimiSummary> = (0..12).map(|k| summary(k, -(k as f64))).collect();
    assert!((rank_correlation(&r, &up).unwrap() - 1.0).abs() < 1e-12);
    assert!((rank_correlation(&r, &down).unwrap() + 1.0).abs() < 1e-12);
    assert!(matches!(
        rank_correlation(&r[..5], &up),
        Err(SpectraError::TooFewPairs { .. })
    ));
}

#[test]
fn spread_needs_confident_records() {
    let r = records(&[0.01; 5]);
    assert!(matches!(
        regularization_index(&r, 50.0),
        Err(SpectraError::TooFewRecords { .. })
    ));
}

#[test]
fn rectangle_pairs_follow_the_separable_oracle() {
    let g = build_double_well(ShapeSpec::new(ShapeKind::Rectangle)).unwrap();
    let spec = solve_spectrum(&g, 0.02, 100.0, DEFAULT_TOLERANCE).unwrap();
    let mut recs = pair_spectrum(&spec).unwrap();
    label_rectangle_pairs(&mut recs, &spec);
    let oracle = separable_oracle_2d(2.0, 2.4, 0.1, 1000.0, 100.0).unwrap();
    // levels near the cutoff may fall on either side of it
    let below: Vec<_> = oracle.pairs.iter().filter(|p| p.e_odd < 95.0).collect();
    assert!(recs.len() >= below.len());
    for (r, o) in recs.iter().zip(below) {
        assert!(r.is_confident(), "pair {}", r.pair);
        assert_eq!(r.label, Some((o.n_x, o.n_y)), "pair {}", r.pair);
        // raw splittings at this spacing carry roughly 10% grid error
        assert!((r.delta_e - o.delta_e).abs() / o.delta_e < 0.15);
    }
    // equal-rate lines: splittings depend on n_x only
    for a in &recs {
        for b in &recs {
            if a.label.unwrap().0 == b.label.unwrap().0 {
                assert!((a.delta_e - b.delta_e).abs() / a.delta_e < 0.02);
            }
        }
    }
}

#[test]
fn measured_count_tracks_weyl_estimate() {
    let g = build_double_well(ShapeSpec::new(ShapeKind::Concave)).unwrap();
    let spec = solve_spectrum(&g, 0.02, 150.0, DEFAULT_TOLERANCE).unwrap();
    let w = weyl_estimate(&g, 150.0);
    assert!((spec.count() as f64 - w).abs() / w < 0.1, "{} vs {w}", spec.count());
    assert!((weyl_estimate(&g, 150.0) - 2.0 * weyl_estimate_single(&g, 150.0)).abs() < 1e-9);
}

proptest! {
    #[test]
    fn pairing_survives_tiny_jitter(
        base in proptest::collection::vec(0.5f64..3.0, 4..40),
        split in proptest::collection::vec(1e-4f64..0.3, 40),
        jitter in proptest::collection::vec(-1e-9f64..1e-9, 80),
    ) {
        let mut e = Vec::new();
        let mut acc = 0.0;
        for b in &base {
            acc += b;
            e.push(acc);
        }
        let o: Vec<f64> = e.iter().zip(&split).map(|(a, d)| a + d).collect();
        let a = pair_states(&e, &o).unwrap();
        let ej: Vec<f64> = e.iter().zip(&jitter).map(|(x, j)| x + j).collect();
        let oj: Vec<f64> = o.iter().zip(&jitter[40..]).map(|(x, j)| x + j).collect();
        let b = pair_states(&ej, &oj).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.pair, y.pair);
            prop_assert!((x.e_even - y.e_even).abs() < 1e-8);
            prop_assert!(x.delta_e >= 0.0);
        }
    }

    #[test]
    fn spread_ratios_are_at_least_one(deltas in proptest::collection::vec(1e-5f64..1.0, 12..60)) {
        let r = records(&deltas);
        if let Ok(points) = regularization_index(&r, 50.0) {
            for p in points {
                prop_assert!(p.ratio >= 1.0);
                prop_assert!(p.count >= 3);
            }
        }
    }

    #[test]
    fn spearman_matches_brute_force(
        x in proptest::collection::vec(-5.0f64..5.0, 3..30),
        y in proptest::collection::vec(-5.0f64..5.0, 30),
    ) {
        let y = &y[..x.len()];
        let a = spearman(&x, y);
        let b = spearman_naive(&x, y);
        prop_assert!((a - b).abs() < 1e-9 || (a.is_nan() && b.is_nan()));
    }
}
