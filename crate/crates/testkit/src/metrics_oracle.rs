//! Brute-force classification metrics.
//!
//! Each function recomputes a metric by direct enumeration over distinct
//! score thresholds, or as a rank statistic, with no incremental updates.
//! Quadratic cost is fine at test sizes.

/// One operating point of a threshold sweep: predict positive where
/// score >= threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
    pub false_positive_rate: f64,
}

/// Every operating point, one per distinct score, in ascending recall order.
/// Empty when there are no positives.
pub fn sweep(scores: &[f64], labels: &[bool]) -> Vec<OperatingPoint> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Vec::new();
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len());
    for t in thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (s, l) in scores.iter().zip(labels) {
            if *s >= t {
                if *l {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        points.push(OperatingPoint {
            threshold: t,
            recall: tp as f64 / n_pos as f64,
            precision: tp as f64 / (tp + fp) as f64,
            false_positive_rate: if n_neg == 0 {
                0.0
            } else {
                fp as f64 / n_neg as f64
            },
        });
    }
    points
}

/// Average precision as the recall-weighted sum of precisions over the
/// sweep, ascending recall, with recall 0 as the starting anchor. `None`
/// when either class is absent, matching the shipped contract.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|l| **l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return None;
    }
    let points = sweep(scores, labels);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for p in &points {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    Some(ap)
}

/// Largest recall whose interpolated precision (max precision at that recall
/// or beyond) still meets `target`; 0 when no point qualifies.
pub fn recall_at_precision(scores: &[f64], labels: &[bool], target: f64) -> Option<f64> {
    let points = sweep(scores, labels);
    if points.is_empty() {
        return None;
    }
    let mut best = 0.0f64;
    let mut max_precision_from_here = 0.0f64;
    for p in points.iter().rev() {
        max_precision_from_here = max_precision_from_here.max(p.precision);
        if max_precision_from_here >= target {
            best = best.max(p.recall);
        }
    }
    Some(best)
}

/// Area under the ROC curve by trapezoidal integration over the sweep with
/// (0,0) and (1,1) anchors. `None` when either class is absent.
pub fn auroc_trapezoid(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let points = sweep(scores, labels);
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for p in &points {
        xs.push(p.false_positive_rate);
        ys.push(p.recall);
    }
    xs.push(1.0);
    ys.push(1.0);
    let mut area = 0.0;
    for i in 1..xs.len() {
        area += (xs[i] - xs[i - 1]) * 0.5 * (ys[i] + ys[i - 1]);
    }
    Some(area)
}

/// Area under the ROC curve as the probability a random positive outscores
/// a random negative, ties counted half. `None` when either class is absent.
pub fn auroc_rank_statistic(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let positives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l)
        .map(|(s, _)| *s)
        .collect();
    let negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| !**l)
        .map(|(s, _)| *s)
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &positives {
        for n in &negatives {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (positives.len() * negatives.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Hand-checked: thresholds 0.9 (P=1, R=1/2), 0.8 (P=1/2, R=1/2),
    // 0.7 (P=2/3, R=1); AP = 1/2*1 + 0 + 1/2*2/3 = 5/6.
    #[test]
    fn ap_three_example_case() {
        let ap = average_precision(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_ranking() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(average_precision(&scores, &labels), Some(1.0));
        assert_eq!(auroc_rank_statistic(&scores, &labels), Some(1.0));
        assert_eq!(auroc_trapezoid(&scores, &labels), Some(1.0));
    }

    #[test]
    fn all_tied_scores() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let labels = [true, false, true, false];
        assert_eq!(auroc_rank_statistic(&scores, &labels), Some(0.5));
        assert_eq!(auroc_trapezoid(&scores, &labels), Some(0.5));
        // Single operating point at recall 1 with precision = prevalence.
        assert_eq!(average_precision(&scores, &labels), Some(0.5));
    }

    #[test]
    fn degenerate_labelings() {
        assert_eq!(average_precision(&[0.1, 0.2], &[false, false]), None);
        assert_eq!(auroc_rank_statistic(&[0.1, 0.2], &[true, true]), None);
    }
}
