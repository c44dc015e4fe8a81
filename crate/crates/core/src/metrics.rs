//! Multiclass evaluation: confusion matrix, weighted/macro summaries,
//! one-vs-rest ROC-AUC and mean/std aggregation over repeated runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::DimensionMismatch {
                expected: y_true.len(),
                actual: y_pred.len(),
            });
        }
        let mut counts = vec![0u64; classes * classes];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            let label = t.max(p);
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
            counts[t * classes + p] += 1;
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.classes.max(1)).map(<[u64]>::to_vec).collect()
    }

    fn support(&self, c: usize) -> u64 {
        (0..self.classes).map(|p| self.get(c, p)).sum()
    }

    fn predicted(&self, c: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, c)).sum()
    }
}

/// Per-class precision, recall and F1 with the zero-denominator convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
    /// Number of precision/recall/F1 values that hit a zero denominator.
    pub zero_division: usize,
}

pub fn class_scores(m: &ConfusionMatrix) -> ClassScores {
    let c = m.classes();
    let mut out = ClassScores {
        precision: Vec::with_capacity(c),
        recall: Vec::with_capacity(c),
        f1: Vec::with_capacity(c),
        support: Vec::with_capacity(c),
        zero_division: 0,
    };
    for k in 0..c {
        let tp = m.get(k, k) as f64;
        let predicted = m.predicted(k);
        let support = m.support(k);
        let ratio = |den: u64, zd: &mut usize| {
            if den == 0 {
                *zd += 1;
                0.0
            } else {
                tp / den as f64
            }
        };
        let p = ratio(predicted, &mut out.zero_division);
        let r = ratio(support, &mut out.zero_division);
        let f1 = if p + r == 0.0 {
            out.zero_division += 1;
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        out.precision.push(p);
        out.recall.push(r);
        out.f1.push(f1);
        out.support.push(support);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
}

pub fn summarize(m: &ConfusionMatrix) -> Result<Summary> {
    let n = m.total();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = n as f64;
    let s = class_scores(m);
    let weighted = |v: &[f64]| -> f64 {
        v.iter()
            .zip(&s.support)
            .map(|(x, &w)| x * w as f64 / n)
            .sum()
    };
    let accuracy = (0..m.classes()).map(|k| m.get(k, k)).sum::<u64>() as f64 / n;
    Ok(Summary {
        accuracy,
        precision_weighted: weighted(&s.precision),
        recall_weighted: weighted(&s.recall),
        f1_weighted: weighted(&s.f1),
        f1_macro: s.f1.iter().sum::<f64>() / m.classes() as f64,
    })
}

/// Area under the ROC curve of `scores` for the positives, via the
/// Mann-Whitney rank statistic with midranks for ties. `None` when either
/// side is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum keeps midranks integral.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1; twice their mean is i + j + 2.
        let mid_x2 = (i + j + 2) as u128;
        let pos_in_group = order[i..=j].iter().filter(|&&k| positive[k]).count() as u128;
        rank_sum_x2 += mid_x2 * pos_in_group;
        i = j + 1;
    }
    let (np, nn) = (n_pos as u128, n_neg as u128);
    // U * 2 = rank_sum * 2 - np (np + 1)
    let u_x2 = rank_sum_x2 - np * (np + 1);
    Some(u_x2 as f64 / (2 * np * nn) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub value: f64,
    /// Classes left out because they had no positives or no negatives.
    pub excluded: Vec<usize>,
}

/// Support-weighted one-vs-rest ROC-AUC over the classes of `scores`.
pub fn roc_auc_ovr_weighted(scores: &DenseMatrix, y_true: &[usize]) -> Result<AucReport> {
    if scores.nrows() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.nrows(),
            actual: y_true.len(),
        });
    }
    let c = scores.ncols();
    if let Some(&label) = y_true.iter().find(|&&y| y >= c) {
        return Err(Error::LabelOutOfRange { label, classes: c });
    }
    if scores.as_slice().iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidConfig("ROC-AUC scores contain NaN".into()));
    }
    let first = *y_true.first().ok_or(Error::EmptyMatrix)?;
    if y_true.iter().all(|&y| y == first) {
        return Err(Error::DegenerateClass);
    }
    let mut weighted = 0.0;
    let mut weight = 0.0;
    let mut excluded = Vec::new();
    for k in 0..c {
        let column: Vec<f64> = (0..scores.nrows()).map(|i| scores.get(i, k)).collect();
        let positive: Vec<bool> = y_true.iter().map(|&y| y == k).collect();
        match binary_auc(&column, &positive) {
            Some(auc) => {
                let support = positive.iter().filter(|&&p| p).count() as f64;
                weighted += support * auc;
                weight += support;
            }
            None => excluded.push(k),
        }
    }
    Ok(AucReport {
        value: weighted / weight,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub accuracy: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub roc_auc_weighted_ovr: f64,
    pub train_runtime_seconds: f64,
}

impl RunMetrics {
    pub fn from_summary(s: Summary, roc_auc: f64, train_runtime_seconds: f64) -> Self {
        Self {
            accuracy: s.accuracy,
            precision_weighted: s.precision_weighted,
            recall_weighted: s.recall_weighted,
            f1_weighted: s.f1_weighted,
            f1_macro: s.f1_macro,
            roc_auc_weighted_ovr: roc_auc,
            train_runtime_seconds,
        }
    }

    /// Field names and values, in table column order.
    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("accuracy", self.accuracy),
            ("precision_weighted", self.precision_weighted),
            ("recall_weighted", self.recall_weighted),
            ("f1_weighted", self.f1_weighted),
            ("f1_macro", self.f1_macro),
            ("roc_auc_weighted_ovr", self.roc_auc_weighted_ovr),
            ("train_runtime_seconds", self.train_runtime_seconds),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if let Some(&first) = values.first() {
            if values.iter().all(|&v| v == first) {
                return Self { mean: first, std: 0.0 };
            }
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.max(0.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub run_count: usize,
    pub accuracy: MeanStd,
    pub precision_weighted: MeanStd,
    pub recall_weighted: MeanStd,
    pub f1_weighted: MeanStd,
    pub f1_macro: MeanStd,
    pub roc_auc_weighted_ovr: MeanStd,
    pub train_runtime_seconds: MeanStd,
}

pub fn aggregate(runs: &[RunMetrics]) -> Result<AggregateMetrics> {
    if runs.is_empty() {
        return Err(Error::EmptyRuns);
    }
    let stat = |f: fn(&RunMetrics) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(AggregateMetrics {
        run_count: runs.len(),
        accuracy: stat(|r| r.accuracy),
        precision_weighted: stat(|r| r.precision_weighted),
        recall_weighted: stat(|r| r.recall_weighted),
        f1_weighted: stat(|r| r.f1_weighted),
        f1_macro: stat(|r| r.f1_macro),
        roc_auc_weighted_ovr: stat(|r| r.roc_auc_weighted_ovr),
        train_runtime_seconds: stat(|r| r.train_runtime_seconds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let m = ConfusionMatrix::new(&[0, 1, 1], &[0, 0, 1], 2).unwrap();
        assert_eq!(m.rows(), vec![vec![1, 0], vec![1, 1]]);
        let perfect = ConfusionMatrix::new(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                assert_eq!(perfect.get(t, p), u64::from(t == p));
            }
        }
        let empty = ConfusionMatrix::new(&[], &[], 2).unwrap();
        assert_eq!(empty.total(), 0);
        assert!(matches!(summarize(&empty), Err(Error::EmptyMatrix)));
        assert!(matches!(
            ConfusionMatrix::new(&[0, 2], &[0, 1], 2),
            Err(Error::LabelOutOfRange { label: 2, .. })
        ));
    }

    #[test]
    fn hand_counted_summary() {
        // A = 0, B = 1; truth [A, B, B], predicted [A, A, B].
        let m = ConfusionMatrix::new(&[0, 1, 1], &[0, 0, 1], 2).unwrap();
        let s = summarize(&m).unwrap();
        let two_thirds = 2.0 / 3.0;
        assert!((s.accuracy - two_thirds).abs() < 1e-15);
        let cs = class_scores(&m);
        assert!((cs.f1[0] - two_thirds).abs() < 1e-15);
        assert!((cs.f1[1] - two_thirds).abs() < 1e-15);
        assert!((s.f1_macro - two_thirds).abs() < 1e-15);
        assert!((s.f1_weighted - two_thirds).abs() < 1e-15);
    }

    #[test]
    fn majority_predictor_closed_form() {
        // 5 classes, 60 % majority.
        let y_true: Vec<usize> = (0..100).map(|i| if i < 60 { 0 } else { 1 + i % 4 }).collect();
        let y_pred = vec![0; 100];
        let s = summarize(&ConfusionMatrix::new(&y_true, &y_pred, 5).unwrap()).unwrap();
        assert!((s.accuracy - 0.60).abs() < 1e-12);
        assert!((s.precision_weighted - 0.36).abs() < 1e-12);
        assert!((s.recall_weighted - 0.60).abs() < 1e-12);
        assert!((s.f1_weighted - 0.45).abs() < 1e-12);
        assert!((s.f1_macro - 0.15).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 2, 1];
        let s = summarize(&ConfusionMatrix::new(&y, &y, 3).unwrap()).unwrap();
        for v in [s.accuracy, s.precision_weighted, s.recall_weighted, s.f1_weighted, s.f1_macro] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn auc_examples() {
        assert_eq!(binary_auc(&[0.9, 0.8, 0.3, 0.1], &[true, false, true, false]), Some(0.75));
        assert_eq!(binary_auc(&[0.5; 4], &[true, false, true, false]), Some(0.5));
        assert_eq!(binary_auc(&[1.0, 2.0], &[true, true]), None);

        let constant = DenseMatrix::from_rows(&vec![vec![1.0, 0.0, 0.0]; 6]).unwrap();
        let y = [0, 0, 1, 1, 2, 0];
        assert_eq!(roc_auc_ovr_weighted(&constant, &y).unwrap().value, 0.5);

        let perfect = DenseMatrix::from_rows(&y.iter().map(|&c| {
            let mut r = vec![0.0; 3];
            r[c] = 1.0;
            r
        }).collect::<Vec<_>>()).unwrap();
        assert_eq!(roc_auc_ovr_weighted(&perfect, &y).unwrap().value, 1.0);
    }

    #[test]
    fn auc_degenerate_and_excluded() {
        let s = DenseMatrix::from_rows(&[vec![0.1, 0.9], vec![0.2, 0.8]]).unwrap();
        assert!(matches!(roc_auc_ovr_weighted(&s, &[1, 1]), Err(Error::DegenerateClass)));
        let s3 = DenseMatrix::from_rows(&[vec![0.1, 0.9, 0.0], vec![0.8, 0.2, 0.0]]).unwrap();
        let r = roc_auc_ovr_weighted(&s3, &[1, 0]).unwrap();
        assert_eq!(r.excluded, vec![2]);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let run = |v: f64| RunMetrics {
            accuracy: v,
            precision_weighted: v,
            recall_weighted: v,
            f1_weighted: v,
            f1_macro: v,
            roc_auc_weighted_ovr: v,
            train_runtime_seconds: 0.0,
        };
        let a = aggregate(&[run(0.4), run(0.6)]).unwrap();
        assert!((a.accuracy.mean - 0.5).abs() < 1e-15);
        assert!((a.accuracy.std - 0.1).abs() < 1e-15);
        let same = aggregate(&[run(0.3); 5]).unwrap();
        assert_eq!(same.f1_macro.std, 0.0);
        assert_eq!(aggregate(&[run(0.7)]).unwrap().accuracy.std, 0.0);
        assert!(matches!(aggregate(&[]), Err(Error::EmptyRuns)));
    }
}
