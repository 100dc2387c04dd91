//! ROC area via the Mann-Whitney rank statistic.

use super::prg::check_labels;
use super::EvalError;

/// Area under the ROC curve; tied scores receive their mid-rank.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    let (pos, neg) = check_labels(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * order[i..j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let labels = [1, 1, 0, 0, 0];
        assert_eq!(roc_auc(&[5.0, 4.0, 3.0, 2.0, 1.0], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[1.0, 2.0, 3.0, 4.0, 5.0], &labels).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5; 5], &labels).unwrap(), 0.5);
    }

    #[test]
    fn matches_pair_counting() {
        let labels = [1, 0, 1, 0, 0, 1, 0];
        let scores = [0.3, 0.3, 0.9, 0.1, 0.5, 0.5, 0.2];
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((roc_auc(&scores, &labels).unwrap() - wins / pairs).abs() < 1e-15);
    }
}
