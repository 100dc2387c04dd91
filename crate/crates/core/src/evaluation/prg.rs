//! Precision-recall-gain curve and the area beneath it.

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    /// `(recG, precG)` at prevalence `pi`; `None` when `tp == 0`.
    pub fn gains(&self, pi: f64) -> Option<(f64, f64)> {
        if self.tp == 0 {
            return None;
        }
        let k = pi / (1.0 - pi);
        let tp = self.tp as f64;
        Some((
            1.0 - k * self.fn_ as f64 / tp,
            1.0 - k * self.fp as f64 / tp,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrgPoint {
    pub recall_gain: f64,
    pub precision_gain: f64,
    /// Counts at the threshold that achieves this point; absent for
    /// interpolated points.
    pub counts: Option<Confusion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrgCurve {
    pub prevalence: f64,
    pub points: Vec<PrgPoint>,
}

/// Confusion counts after admitting each group of tied scores, from the
/// highest score down. The last entry is the always-positive classifier.
pub fn threshold_counts(scores: &[f64], labels: &[u8]) -> Result<Vec<Confusion>, EvalError> {
    let (pos, neg) = check_labels(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(Confusion {
            tp,
            fp,
            fn_: pos - tp,
        });
    }
    debug_assert_eq!(fp, neg);
    Ok(out)
}

pub(crate) fn check_labels(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore { index: i });
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::DegenerateLabels {
            positives: pos,
            negatives: neg,
        });
    }
    Ok((pos, neg))
}

/// Builds the PRG curve: achieved points with `recG >= 0`, an entry point at
/// `recG = 0`, extra points where `precG` crosses zero, and every point clamped
/// into the unit square.
pub fn prg_curve(scores: &[f64], labels: &[u8]) -> Result<PrgCurve, EvalError> {
    let counts = threshold_counts(scores, labels)?;
    let pos = counts.last().map(|c| c.tp).unwrap_or(0);
    let pi = pos as f64 / labels.len() as f64;
    let raw: Vec<PrgPoint> = counts
        .iter()
        .filter_map(|c| {
            c.gains(pi).map(|(r, p)| PrgPoint {
                recall_gain: r,
                precision_gain: p,
                counts: Some(*c),
            })
        })
        .collect();
    Ok(PrgCurve {
        prevalence: pi,
        points: clip_to_unit_square(&raw),
    })
}

fn clip_to_unit_square(raw: &[PrgPoint]) -> Vec<PrgPoint> {
    // the always-positive point has recG = 1, so some point is retained
    let first = raw
        .iter()
        .position(|p| p.recall_gain >= 0.0)
        .expect("always-positive point has recall gain 1");
    let mut kept: Vec<PrgPoint> = Vec::with_capacity(raw.len() - first + 2);
    let head = raw[first];
    if head.recall_gain > 0.0 {
        let entry_prec = if first > 0 {
            let a = raw[first - 1];
            let t = -a.recall_gain / (head.recall_gain - a.recall_gain);
            a.precision_gain + t * (head.precision_gain - a.precision_gain)
        } else {
            head.precision_gain
        };
        kept.push(PrgPoint {
            recall_gain: 0.0,
            precision_gain: entry_prec,
            counts: None,
        });
    }
    kept.extend_from_slice(&raw[first..]);

    let mut out: Vec<PrgPoint> = Vec::with_capacity(kept.len() * 2);
    for (i, p) in kept.iter().enumerate() {
        if i > 0 {
            let a = kept[i - 1];
            if (a.precision_gain < 0.0 && p.precision_gain > 0.0)
                || (a.precision_gain > 0.0 && p.precision_gain < 0.0)
            {
                let t = a.precision_gain / (a.precision_gain - p.precision_gain);
                out.push(PrgPoint {
                    recall_gain: a.recall_gain + t * (p.recall_gain - a.recall_gain),
                    precision_gain: 0.0,
                    counts: None,
                });
            }
        }
        out.push(*p);
    }
    for p in &mut out {
        p.recall_gain = p.recall_gain.clamp(0.0, 1.0);
        p.precision_gain = p.precision_gain.clamp(0.0, 1.0);
    }
    out
}

/// Trapezoidal area under a PRG curve.
pub fn auc_prg(curve: &PrgCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| {
            (w[1].recall_gain - w[0].recall_gain) * (w[0].precision_gain + w[1].precision_gain)
                / 2.0
        })
        .sum()
}

/// Shortcut for `auc_prg(&prg_curve(scores, labels)?)`.
pub fn auc_prg_of(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    Ok(auc_prg(&prg_curve(scores, labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_of_ten() -> Vec<u8> {
        let mut l = vec![1, 1];
        l.extend([0; 8]);
        l
    }

    #[test]
    fn hand_points() {
        let pi = 0.2;
        let c = Confusion {
            tp: 2,
            fp: 0,
            fn_: 0,
        };
        assert_eq!(c.gains(pi), Some((1.0, 1.0)));
        let c = Confusion {
            tp: 2,
            fp: 8,
            fn_: 0,
        };
        assert_eq!(c.gains(pi), Some((1.0, 0.0)));
        let c = Confusion {
            tp: 1,
            fp: 1,
            fn_: 1,
        };
        assert_eq!(c.gains(pi), Some((0.75, 0.75)));
        assert_eq!(
            Confusion {
                tp: 0,
                fp: 3,
                fn_: 2
            }
            .gains(pi),
            None
        );
    }

    #[test]
    fn perfect_ranker_has_unit_area() {
        let labels = two_of_ten();
        let scores: Vec<f64> = (0..10).map(|i| 1.0 - i as f64 / 10.0).collect();
        let curve = prg_curve(&scores, &labels).unwrap();
        assert_eq!(auc_prg(&curve), 1.0);
        let last = curve.points.last().unwrap();
        assert_eq!((last.recall_gain, last.precision_gain), (1.0, 0.0));
    }

    #[test]
    fn constant_scores_have_zero_area() {
        let labels = two_of_ten();
        let curve = prg_curve(&[0.3; 10], &labels).unwrap();
        assert_eq!(auc_prg(&curve), 0.0);
    }

    #[test]
    fn degenerate_labels() {
        assert!(matches!(
            prg_curve(&[0.1, 0.2], &[0, 0]),
            Err(EvalError::DegenerateLabels { .. })
        ));
    }

    #[test]
    fn curve_is_in_unit_square_and_monotone_in_recall() {
        let labels = [1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1];
        let scores = [0.9, 0.95, 0.1, 0.8, 0.3, 0.5, 0.5, 0.2, 0.7, 0.05, 0.6, 0.4];
        let curve = prg_curve(&scores, &labels).unwrap();
        for w in curve.points.windows(2) {
            assert!(w[0].recall_gain <= w[1].recall_gain);
        }
        for p in &curve.points {
            assert!((0.0..=1.0).contains(&p.recall_gain));
            assert!((0.0..=1.0).contains(&p.precision_gain));
        }
        assert_eq!(curve.points[0].recall_gain, 0.0);
    }
}
