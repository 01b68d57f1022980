//! Ranking and calibration metrics over scored examples.
//!
//! All threshold sweeps are tie-grouped: every example sharing a score
//! enters the confusion counts atomically, so metrics are invariant under
//! permutation of the input and under strictly increasing transforms of the
//! scores. Recalls and precisions are ratios of integer counts, which keeps
//! the arithmetic reproducible across runs.

pub mod io;

use std::fmt;

pub const DEFAULT_N_BINS: usize = 10;
pub const DEFAULT_PRECISION_TARGET: f64 = 0.9;

/// One test-set prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredExample {
    /// Predicted probability in [0, 1].
    pub score: f64,
    pub label: bool,
    /// Whether the prediction date was shifted off an inpatient admission.
    pub admitted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Pr,
    Roc,
    Reliability,
}

impl CurveKind {
    pub fn axis_names(self) -> (&'static str, &'static str) {
        match self {
            CurveKind::Pr => ("recall", "precision"),
            CurveKind::Roc => ("false_positive_rate", "true_positive_rate"),
            CurveKind::Reliability => ("mean_score", "positive_fraction"),
        }
    }
}

/// An ordered polyline in the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoints {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no examples to evaluate")]
    Empty,
    #[error("score at index {index} is not a finite probability")]
    BadScore { index: usize },
    #[error("all examples share one class; ranking metrics are undefined")]
    SingleClass,
}

/// Cumulative (threshold, true positives, false positives) per distinct
/// score, descending. Classifying at each returned threshold t means
/// predicting positive when score >= t.
fn sweep(scores: &[f64], labels: &[bool]) -> Vec<(f64, usize, usize)> {
    debug_assert_eq!(scores.len(), labels.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let mut j = i;
        while j < order.len() && scores[order[j]] == threshold {
            if labels[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        out.push((threshold, tp, fp));
        i = j;
    }
    out
}

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let n_pos = labels.iter().filter(|l| **l).count();
    (n_pos, labels.len() - n_pos)
}

/// Non-interpolated average precision; `None` when a class is missing.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (_, tp, fp) in sweep(scores, labels) {
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

/// Interpolated precision-recall curve plus non-interpolated average
/// precision. Curve precision at each achieved recall is the maximum raw
/// precision at that recall or beyond, so it is non-increasing.
pub fn pr_curve_and_ap(scores: &[f64], labels: &[bool]) -> Result<(CurvePoints, f64), EvalError> {
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut raw = Vec::new();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (_, tp, fp) in sweep(scores, labels) {
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        raw.push((recall, precision));
    }
    // Backward running max, then one point per distinct recall.
    let mut best = 0.0f64;
    for p in raw.iter_mut().rev() {
        best = best.max(p.1);
        p.1 = best;
    }
    raw.dedup_by(|b, a| b.0 == a.0);
    Ok((
        CurvePoints {
            kind: CurveKind::Pr,
            points: raw,
        },
        ap,
    ))
}

/// Largest recall whose interpolated precision meets the target; 0 when the
/// curve never reaches it.
pub fn recall_at_precision(curve: &CurvePoints, target: f64) -> f64 {
    debug_assert_eq!(curve.kind, CurveKind::Pr);
    curve
        .points
        .iter()
        .rev()
        .find(|(_, precision)| *precision >= target)
        .map_or(0.0, |(recall, _)| *recall)
}

/// ROC curve anchored at (0,0) and area by the trapezoidal rule. With
/// grouped ties this equals the rank statistic (probability a random
/// positive outscores a random negative, ties counted half).
pub fn roc_and_auroc(scores: &[f64], labels: &[bool]) -> Result<(CurvePoints, f64), EvalError> {
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut points = vec![(0.0, 0.0)];
    for (_, tp, fp) in sweep(scores, labels) {
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auroc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok((
        CurvePoints {
            kind: CurveKind::Roc,
            points,
        },
        auroc,
    ))
}

/// Mean squared difference between score and label; `None` on empty input.
pub fn brier(scores: &[f64], labels: &[bool]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let sum: f64 = scores
        .iter()
        .zip(labels)
        .map(|(s, l)| {
            let y = if *l { 1.0 } else { 0.0 };
            (s - y) * (s - y)
        })
        .sum();
    Some(sum / scores.len() as f64)
}

/// Calibration curve over equal-width score bins: per non-empty bin, mean
/// predicted score against observed positive fraction. A score of exactly
/// 1.0 lands in the top bin.
pub fn reliability_curve(scores: &[f64], labels: &[bool], n_bins: usize) -> CurvePoints {
    assert!(n_bins >= 1, "need at least one calibration bin");
    let mut score_sum = vec![0.0f64; n_bins];
    let mut count = vec![0usize; n_bins];
    let mut positives = vec![0usize; n_bins];
    for (s, l) in scores.iter().zip(labels) {
        let bin = ((s * n_bins as f64).floor() as usize).min(n_bins - 1);
        score_sum[bin] += s;
        count[bin] += 1;
        if *l {
            positives[bin] += 1;
        }
    }
    let points = (0..n_bins)
        .filter(|b| count[*b] > 0)
        .map(|b| {
            (
                score_sum[b] / count[b] as f64,
                positives[b] as f64 / count[b] as f64,
            )
        })
        .collect();
    CurvePoints {
        kind: CurveKind::Reliability,
        points,
    }
}

/// The full metric set for one example population.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBundle {
    pub n_examples: usize,
    pub n_positive: usize,
    pub average_precision: f64,
    pub auroc: f64,
    pub brier: f64,
    pub recall_at_target: f64,
    pub pr_curve: CurvePoints,
    pub roc_curve: CurvePoints,
    pub reliability: CurvePoints,
}

impl MetricBundle {
    pub fn prevalence(&self) -> f64 {
        self.n_positive as f64 / self.n_examples as f64
    }

    fn compute(
        scores: &[f64],
        labels: &[bool],
        n_bins: usize,
        precision_target: f64,
    ) -> Option<MetricBundle> {
        let (n_pos, n_neg) = class_counts(labels);
        if n_pos == 0 || n_neg == 0 {
            return None;
        }
        let (pr_curve, average_precision) = pr_curve_and_ap(scores, labels).ok()?;
        let (roc_curve, auroc) = roc_and_auroc(scores, labels).ok()?;
        Some(MetricBundle {
            n_examples: labels.len(),
            n_positive: n_pos,
            average_precision,
            auroc,
            brier: brier(scores, labels).expect("non-empty by class counts"),
            recall_at_target: recall_at_precision(&pr_curve, precision_target),
            pr_curve,
            roc_curve,
            reliability: reliability_curve(scores, labels, n_bins),
        })
    }
}

/// Metrics over the whole test set plus the admitted subset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub overall: MetricBundle,
    /// `None` when the admitted subset is empty or single-class.
    pub admitted: Option<MetricBundle>,
    pub n_bins: usize,
    pub precision_target: f64,
}

pub fn evaluate_all(
    examples: &[ScoredExample],
    n_bins: usize,
    precision_target: f64,
) -> Result<EvaluationReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::Empty);
    }
    for (index, e) in examples.iter().enumerate() {
        if !(e.score.is_finite() && (0.0..=1.0).contains(&e.score)) {
            return Err(EvalError::BadScore { index });
        }
    }
    let scores: Vec<f64> = examples.iter().map(|e| e.score).collect();
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let overall = MetricBundle::compute(&scores, &labels, n_bins, precision_target)
        .ok_or(EvalError::SingleClass)?;

    let adm_scores: Vec<f64> = examples
        .iter()
        .filter(|e| e.admitted)
        .map(|e| e.score)
        .collect();
    let adm_labels: Vec<bool> = examples
        .iter()
        .filter(|e| e.admitted)
        .map(|e| e.label)
        .collect();
    let admitted = MetricBundle::compute(&adm_scores, &adm_labels, n_bins, precision_target);

    Ok(EvaluationReport {
        overall,
        admitted,
        n_bins,
        precision_target,
    })
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Pr => "pr",
            CurveKind::Roc => "roc",
            CurveKind::Reliability => "reliability",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|b| *b == 1).collect()
    }

    #[test]
    fn ap_hand_fixture() {
        let ap = average_precision(&[0.9, 0.8, 0.7], &labels(&[1, 0, 1])).unwrap();
        assert_eq!(ap, 0.5 * 1.0 + 0.5 * (2.0 / 3.0));
    }

    #[test]
    fn perfect_ranking_scores_one() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let l = labels(&[1, 1, 0, 0]);
        assert_eq!(average_precision(&scores, &l), Some(1.0));
        let (_, auroc) = roc_and_auroc(&scores, &l).unwrap();
        assert_eq!(auroc, 1.0);
        let (curve, _) = pr_curve_and_ap(&scores, &l).unwrap();
        assert_eq!(recall_at_precision(&curve, 0.9), 1.0);
    }

    #[test]
    fn all_tied_scores_give_chance_auroc_and_prevalence_ap() {
        let scores = [0.4; 6];
        let l = labels(&[1, 0, 0, 1, 0, 0]);
        let (_, auroc) = roc_and_auroc(&scores, &l).unwrap();
        assert_eq!(auroc, 0.5);
        assert_eq!(average_precision(&scores, &l), Some(2.0 / 6.0));
    }

    #[test]
    fn tied_pair_enters_atomically() {
        let ap = average_precision(&[0.5, 0.5], &labels(&[1, 0])).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn single_class_is_degenerate() {
        assert_eq!(average_precision(&[0.1, 0.9], &labels(&[1, 1])), None);
        assert_eq!(
            roc_and_auroc(&[0.1, 0.9], &labels(&[0, 0])),
            Err(EvalError::SingleClass)
        );
        assert_eq!(
            pr_curve_and_ap(&[], &labels(&[])),
            Err(EvalError::SingleClass)
        );
    }

    #[test]
    fn interpolation_takes_forward_maximum() {
        // Raw precisions 1, 1/2, 2/3, 3/4 at recalls 1/3, 1/3, 2/3, 1.
        let scores = [0.9, 0.8, 0.7, 0.6];
        let l = labels(&[1, 0, 1, 1]);
        let (curve, _) = pr_curve_and_ap(&scores, &l).unwrap();
        assert_eq!(
            curve.points,
            vec![(1.0 / 3.0, 1.0), (2.0 / 3.0, 0.75), (1.0, 0.75)]
        );
        assert_eq!(recall_at_precision(&curve, 0.9), 1.0 / 3.0);
        assert_eq!(recall_at_precision(&curve, 0.7), 1.0);
    }

    #[test]
    fn unreached_precision_target_gives_zero_recall() {
        // Best interpolated precision is 1/2, below the 0.9 target.
        let (curve, _) = pr_curve_and_ap(&[0.9, 0.8], &labels(&[0, 1])).unwrap();
        assert_eq!(recall_at_precision(&curve, 0.9), 0.0);
    }

    #[test]
    fn roc_is_anchored_and_monotone() {
        let scores = [0.9, 0.8, 0.7, 0.6, 0.5];
        let l = labels(&[1, 0, 1, 0, 0]);
        let (curve, _) = roc_and_auroc(&scores, &l).unwrap();
        assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
        for w in curve.points.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn brier_fixed_points() {
        assert_eq!(brier(&[1.0, 0.0], &labels(&[1, 0])), Some(0.0));
        assert_eq!(brier(&[0.5, 0.5, 0.5], &labels(&[1, 0, 1])), Some(0.25));
        assert_eq!(brier(&[], &labels(&[])), None);
    }

    #[test]
    fn reliability_boundary_and_single_point() {
        let curve = reliability_curve(&[1.0, 1.0], &labels(&[1, 1]), 10);
        assert_eq!(curve.points, vec![(1.0, 1.0)]);
        // 0.95 and 1.0 share the top decile.
        let curve = reliability_curve(&[0.95, 1.0], &labels(&[0, 1]), 10);
        assert_eq!(curve.points, vec![(0.975, 0.5)]);
        // Bins ordered by score, empties omitted.
        let curve = reliability_curve(&[0.05, 0.55], &labels(&[0, 1]), 10);
        assert_eq!(curve.points, vec![(0.05, 0.0), (0.55, 1.0)]);
    }

    #[test]
    fn evaluate_all_handles_admitted_subset() {
        let examples = vec![
            ScoredExample {
                score: 0.9,
                label: true,
                admitted: true,
            },
            ScoredExample {
                score: 0.7,
                label: false,
                admitted: true,
            },
            ScoredExample {
                score: 0.3,
                label: true,
                admitted: false,
            },
            ScoredExample {
                score: 0.1,
                label: false,
                admitted: false,
            },
        ];
        let report = evaluate_all(&examples, 10, 0.9).unwrap();
        assert_eq!(report.overall.n_examples, 4);
        let admitted = report.admitted.unwrap();
        assert_eq!(admitted.n_examples, 2);
        assert_eq!(admitted.n_positive, 1);
        assert_eq!(admitted.auroc, 1.0);

        // Single-class admitted subset is unavailable, overall still works.
        let mut one_sided = examples.clone();
        one_sided[1].admitted = false;
        let report = evaluate_all(&one_sided, 10, 0.9).unwrap();
        assert!(report.admitted.is_none());
    }

    #[test]
    fn evaluate_all_rejects_bad_input() {
        assert_eq!(evaluate_all(&[], 10, 0.9), Err(EvalError::Empty));
        let bad = [ScoredExample {
            score: 1.5,
            label: true,
            admitted: false,
        }];
        assert_eq!(
            evaluate_all(&bad, 10, 0.9),
            Err(EvalError::BadScore { index: 0 })
        );
        let single = [
            ScoredExample {
                score: 0.4,
                label: true,
                admitted: false,
            },
            ScoredExample {
                score: 0.2,
                label: true,
                admitted: false,
            },
        ];
        assert_eq!(evaluate_all(&single, 10, 0.9), Err(EvalError::SingleClass));
    }
}
