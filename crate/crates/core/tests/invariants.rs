use maxsketch::estimator::{EstimatorParams, GaussianMaxTable, ThresholdGrid};
use maxsketch::readout::{learn_thresholds, pav_fit, pool_adjacent_violators, CalibrationSample};
use maxsketch::{MaxSketch, ProjectionSet};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const D: usize = 5;
const M: usize = 48;

fn rows_strategy(max_rows: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::array::uniform5(-1.0f64..1.0), 1..max_rows).prop_map(|rows| {
        rows.into_iter()
            .flat_map(|mut r| {
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < 1e-2 {
                    r = [1.0, 0.0, 0.0, 0.0, 0.0];
                } else {
                    r.iter_mut().for_each(|v| *v /= norm);
                }
                r
            })
            .collect()
    })
}

fn sketch_of(rows: &[f64], proj: &ProjectionSet<f64>) -> MaxSketch<f64> {
    let mut s = MaxSketch::new(proj);
    s.update_batch(rows, proj).unwrap();
    s
}

fn proj(seed: u64) -> ProjectionSet<f64> {
    ProjectionSet::new(D, M, seed).unwrap()
}

/// Sum of squared errors of the best nondecreasing fit, by brute force over
/// all contiguous block partitions whose block means are nondecreasing.
fn isotonic_oracle(y: &[f64]) -> f64 {
    let n = y.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << (n - 1)) {
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut sse = 0.0;
        let mut ok = true;
        for i in 0..n {
            if i == n - 1 || mask & (1 << i) != 0 {
                let block = &y[start..=i];
                let mean = block.iter().sum::<f64>() / block.len() as f64;
                if mean < prev_mean - 1e-12 {
                    ok = false;
                    break;
                }
                sse += block.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
                prev_mean = mean;
                start = i + 1;
            }
        }
        if ok {
            best = best.min(sse);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn permutation_invariant(rows in rows_strategy(40), seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        let p = proj(seed);
        let mut order: Vec<&[f64]> = rows.chunks(D).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let shuffled: Vec<f64> = order.concat();
        prop_assert_eq!(sketch_of(&rows, &p).maxima().to_vec(), sketch_of(&shuffled, &p).maxima().to_vec());
    }

    #[test]
    fn duplicates_do_not_change_maxima(rows in rows_strategy(30), seed in any::<u64>()) {
        let p = proj(seed);
        let mut doubled = rows.clone();
        doubled.extend_from_slice(&rows);
        prop_assert_eq!(sketch_of(&rows, &p).maxima().to_vec(), sketch_of(&doubled, &p).maxima().to_vec());
    }

    #[test]
    fn maxima_monotone_in_stream(a in rows_strategy(20), b in rows_strategy(20), seed in any::<u64>()) {
        let p = proj(seed);
        let sa = sketch_of(&a, &p);
        let mut both = a.clone();
        both.extend_from_slice(&b);
        let sab = sketch_of(&both, &p);
        for (x, y) in sa.maxima().iter().zip(sab.maxima()) {
            prop_assert!(x <= y);
        }
        prop_assert!(sa.statistic().unwrap() <= sab.statistic().unwrap());
    }

    #[test]
    fn merge_laws(a in rows_strategy(20), b in rows_strategy(20), c in rows_strategy(20), seed in any::<u64>()) {
        let p = proj(seed);
        let (sa, sb, sc) = (sketch_of(&a, &p), sketch_of(&b, &p), sketch_of(&c, &p));
        let mut concat = a.clone();
        concat.extend_from_slice(&b);
        prop_assert_eq!(sa.merge(&sb).unwrap(), sketch_of(&concat, &p));
        prop_assert_eq!(sa.merge(&sb).unwrap(), sb.merge(&sa).unwrap());
        prop_assert_eq!(
            sa.merge(&sb).unwrap().merge(&sc).unwrap(),
            sa.merge(&sb.merge(&sc).unwrap()).unwrap()
        );
        prop_assert_eq!(sa.merge(&sa).unwrap().maxima().to_vec(), sa.maxima().to_vec());
    }

    #[test]
    fn codec_round_trip(rows in rows_strategy(20), seed in any::<u64>()) {
        let p = proj(seed);
        let s = sketch_of(&rows, &p);
        prop_assert_eq!(MaxSketch::<f64>::from_bytes(&s.to_bytes().unwrap()).unwrap(), s);
    }

    #[test]
    fn pav_is_monotone_and_preserves_mass(y in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let w = vec![1.0; y.len()];
        let blocks = pool_adjacent_violators(&y, &w);
        prop_assert_eq!(blocks.iter().map(|b| b.len).sum::<usize>(), y.len());
        for pair in blocks.windows(2) {
            prop_assert!(pair[0].value < pair[1].value);
        }
        let fitted: f64 = blocks.iter().map(|b| b.value * b.weight).sum();
        prop_assert!((fitted - y.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn pav_matches_exhaustive_optimum(y in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        let w = vec![1.0; y.len()];
        let blocks = pool_adjacent_violators(&y, &w);
        let mut sse = 0.0;
        for b in &blocks {
            sse += y[b.start..b.start + b.len].iter().map(|v| (v - b.value).powi(2)).sum::<f64>();
        }
        prop_assert!((sse - isotonic_oracle(&y)).abs() < 1e-9);
    }

    #[test]
    fn readouts_are_monotone(
        pts in prop::collection::vec((0.0f64..4.0, 1u64..80), 2..60),
        probes in prop::collection::vec(-1.0f64..5.0, 2..20),
    ) {
        let samples: Vec<_> = pts.iter().map(|&(s, k)| CalibrationSample::new(s, k)).collect();
        let mut probes = probes;
        probes.sort_by(f64::total_cmp);
        for f in [pav_fit(&samples).unwrap(), learn_thresholds(&samples, 0.5).unwrap()] {
            let out: Vec<u64> = probes.iter().map(|&s| f.apply(s).unwrap()).collect();
            prop_assert!(out.windows(2).all(|w| w[0] <= w[1]), "{:?}", out);
            prop_assert!(out.iter().all(|&k| k >= 1));
        }
    }

    #[test]
    fn estimate_monotone_in_statistic(a in 0.0f64..4.0, b in 0.0f64..4.0) {
        let params = EstimatorParams::new(2000, 0.5, 0.1, 0.0, 1e-4, 4096).unwrap();
        let grid = ThresholdGrid::build(params, &GaussianMaxTable::default()).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(grid.estimate(lo).unwrap().k_hat <= grid.estimate(hi).unwrap().k_hat);
    }
}
