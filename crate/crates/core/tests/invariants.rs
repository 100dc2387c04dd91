//! Property tests for bookkeeping invariants that every module relies on.

mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnnbof::evaluation::{ks_normal, paired_p_value, percentile_interval, resample_indices};
use rnnbof::model::{batch_loss, LossWeights};
use rnnbof::tuning::{sample_config, Observation, SearchSpace, Strategy, TpeSettings};
use rnnbof::windowing::{
    build_cv_folds, pool_sizes, split_train_test, test_window_count, PatientSeries,
};

fn random_series(seed: u64, patients: usize) -> Vec<std::sync::Arc<PatientSeries<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..patients)
        .map(|p| {
            let tp = rng.random_range(25..90);
            let events: Vec<u8> = (0..tp).map(|_| rng.random_bool(0.2) as u8).collect();
            let dyns = vec![(0..tp).map(|_| rng.random_range(-1.0..1.0)).collect()];
            common::series(&common::record(&format!("P{p}"), &events, &dyns, &[0.5]))
        })
        .collect()
}

proptest! {
    #[test]
    fn split_counts_and_disjointness(seed in 0u64..5_000, patients in 1usize..6, n in 1usize..20) {
        let series = random_series(seed, patients);
        let split = split_train_test(&series, n, 0.2).unwrap();
        let expected: usize = series.iter().map(|s| s.len() - n).sum();
        prop_assert_eq!(split.train_len() + split.test_len(), expected);
        for (p, s) in split.patients.iter().zip(&series) {
            prop_assert_eq!(p.test.len(), test_window_count(s.len(), 0.2));
            let train: HashSet<usize> = p.train.iter().map(|w| w.label_index()).collect();
            prop_assert!(p.test.iter().all(|w| !train.contains(&w.label_index())));
            prop_assert!(p.test.windows(2).all(|w| w[0].label_index() + 1 == w[1].label_index()));
        }
    }

    #[test]
    fn folds_expand_and_never_overlap(seed in 0u64..5_000, k in 1usize..6) {
        let series = random_series(seed, 4);
        let split = split_train_test(&series, 3, 0.2).unwrap();
        let folds = build_cv_folds(&split, k);
        prop_assert_eq!(folds.folds.len(), k);
        for pair in folds.folds.windows(2) {
            prop_assert!(pair[0].train.len() < pair[1].train.len());
        }
        for f in &folds.folds {
            let train: HashSet<(String, usize)> = f
                .train
                .iter()
                .map(|w| (w.patient_id().to_string(), w.label_index()))
                .collect();
            prop_assert!(f
                .validation
                .iter()
                .all(|w| !train.contains(&(w.patient_id().to_string(), w.label_index()))));
        }
    }

    #[test]
    fn pools_partition_the_count(count in 0usize..500, pools in 1usize..12) {
        let sizes = pool_sizes(count, pools);
        prop_assert_eq!(sizes.iter().sum::<usize>(), count);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn weighted_loss_is_non_negative_and_finite(
        preds in prop::collection::vec(0.0f64..=1.0, 1..30),
        wp in 0.1f64..10.0,
        wn in 0.1f64..10.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<u8> = preds.iter().map(|_| rng.random_range(0..=1)).collect();
        let l: f64 = batch_loss(&preds, &labels, &LossWeights::new(wp, wn).unwrap(), &[], 0.0).unwrap();
        prop_assert!(l.is_finite() && l >= 0.0);
    }

    #[test]
    fn resamples_stay_inside_each_patient(
        lens in prop::collection::vec(1usize..30, 1..8),
        block in 1usize..15,
        seed in any::<u64>(),
    ) {
        let mut ranges = Vec::new();
        let mut start = 0;
        for l in &lens {
            ranges.push(start..start + l);
            start += l;
        }
        let idx = resample_indices(&ranges, block, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(idx.len(), start);
        for r in &ranges {
            prop_assert!(idx[r.clone()].iter().all(|i| r.contains(i)));
        }
    }

    #[test]
    fn interval_is_ordered_and_p_in_range(mut xs in prop::collection::vec(-1.0f64..1.0, 1..200)) {
        let p = paired_p_value(&xs, &xs.iter().rev().copied().collect::<Vec<_>>());
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert_eq!(paired_p_value(&xs, &xs), 1.0);
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = percentile_interval(&xs, 0.05);
        prop_assert!(lo <= hi);
        let ks = ks_normal(&xs);
        prop_assert!((0.0..=1.0).contains(&ks.p_value));
        prop_assert!(ks.statistic.is_nan() || (0.0..=1.0).contains(&ks.statistic));
    }

    #[test]
    fn tpe_samples_stay_in_bounds(seed in any::<u64>(), history_len in 0usize..40) {
        let space = SearchSpace::rnn();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut history = Vec::new();
        for i in 0..history_len {
            let s = rnnbof::tuning::sample_random(&space, &mut rng);
            history.push(Observation { values: s.values.iter().map(|(_, v)| *v).collect(), objective: (i % 7) as f64 });
        }
        let s = sample_config(&space, &history, Strategy::Tpe, &TpeSettings::default(), &mut rng);
        for (d, (_, v)) in space.dimensions.iter().zip(&s.values) {
            prop_assert!(d.low <= *v && *v <= d.high, "{} = {}", d.name, v);
        }
    }
}
