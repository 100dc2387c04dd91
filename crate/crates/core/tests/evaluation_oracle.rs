//! AUC-PRG against a brute-force oracle that counts every threshold directly
//! and integrates the positive part of the gain curve segment by segment.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnnbof::evaluation::{auc_prg_of, prg_curve, roc_auc, Confusion};

/// Positive part of the integral of the line through `(r0, p0)`-`(r1, p1)`
/// restricted to `r >= 0`.
fn positive_area(r0: f64, p0: f64, r1: f64, p1: f64) -> f64 {
    if r1 <= 0.0 || r1 <= r0 {
        return 0.0;
    }
    let (mut a, mut pa) = (r0, p0);
    if a < 0.0 {
        pa = p0 + (p1 - p0) * (0.0 - r0) / (r1 - r0);
        a = 0.0;
    }
    let (b, pb) = (r1, p1);
    if pa >= 0.0 && pb >= 0.0 {
        (b - a) * (pa + pb) / 2.0
    } else if pa <= 0.0 && pb <= 0.0 {
        0.0
    } else {
        let z = a + (b - a) * pa / (pa - pb);
        if pa > 0.0 {
            (z - a) * pa / 2.0
        } else {
            (b - z) * pb / 2.0
        }
    }
}

fn oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len();
    let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let pi = pos / n as f64;
    let k = pi / (1.0 - pi);
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut pts = Vec::new();
    for &t in &thresholds {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for i in 0..n {
            match (scores[i] >= t, labels[i] == 1) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        if tp > 0.0 {
            pts.push((1.0 - k * fn_ / tp, 1.0 - k * fp / tp));
        }
    }
    let mut area = 0.0;
    let (r0, p0) = pts[0];
    if r0 > 0.0 {
        area += r0 * p0.max(0.0);
    }
    for w in pts.windows(2) {
        area += positive_area(w[0].0, w[0].1, w[1].0, w[1].1);
    }
    area
}

fn random_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    loop {
        let n = rng.random_range(2..=50);
        let levels = if rng.random_bool(0.5) { 5 } else { 1_000_000 };
        let rate = rng.random_range(0.05..0.6);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_bool(rate) as u8).collect();
        let skill = rng.random_range(-1.0..3.0);
        let scores: Vec<f64> = labels
            .iter()
            .map(|&y| {
                let raw: f64 = rng.random_range(0.0..1.0) + skill * y as f64 * 0.3;
                (raw * levels as f64).floor() / levels as f64
            })
            .collect();
        let pos = labels.iter().filter(|&&y| y == 1).count();
        if pos > 0 && pos < n {
            return (scores, labels);
        }
    }
}

#[test]
fn matches_brute_force_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    for case in 0..1000 {
        let (scores, labels) = random_case(&mut rng);
        let got = auc_prg_of(&scores, &labels).unwrap();
        let want = oracle(&scores, &labels);
        assert!((got - want).abs() <= 1e-9, "case {case}: {got} vs {want}");
        assert!((0.0..=1.0).contains(&got));
    }
}

#[test]
fn hand_cases() {
    assert_eq!(
        Confusion {
            tp: 1,
            fp: 1,
            fn_: 1
        }
        .gains(0.2),
        Some((0.75, 0.75))
    );
    assert_eq!(
        Confusion {
            tp: 2,
            fp: 0,
            fn_: 0
        }
        .gains(0.2),
        Some((1.0, 1.0))
    );
    assert_eq!(
        Confusion {
            tp: 2,
            fp: 8,
            fn_: 0
        }
        .gains(0.2),
        Some((1.0, 0.0))
    );
    let mut labels = vec![1u8, 1];
    labels.extend([0u8; 8]);
    let perfect: Vec<f64> = (0..10).map(|i| -(i as f64)).collect();
    assert_eq!(auc_prg_of(&perfect, &labels).unwrap(), 1.0);
    assert_eq!(auc_prg_of(&[1.0; 10], &labels).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn strictly_increasing_maps_leave_curve_unchanged(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scores, labels) = random_case(&mut rng);
        let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(prg_curve(&scores, &labels).unwrap(), prg_curve(&mapped, &labels).unwrap());
        prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), roc_auc(&mapped, &labels).unwrap());
    }

    #[test]
    fn permutation_invariance(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scores, labels) = random_case(&mut rng);
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        use rand::seq::SliceRandom;
        idx.shuffle(&mut rng);
        let s2: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l2: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
        let a = auc_prg_of(&scores, &labels).unwrap();
        let b = auc_prg_of(&s2, &l2).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let ra = roc_auc(&scores, &labels).unwrap();
        let rb = roc_auc(&s2, &l2).unwrap();
        prop_assert!((ra - rb).abs() < 1e-12);
    }

    #[test]
    fn roc_complements_under_negation(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scores, labels) = random_case(&mut rng);
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let sum = roc_auc(&scores, &labels).unwrap() + roc_auc(&neg, &labels).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }
}
