//! Confusion matrices and mean per-class recall / precision.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{ForwardMode, ModelParams, Tensor};

/// Row = true class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_counts(n_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_classes * n_classes {
            return Err(Error::ShapeMismatch {
                context: "confusion matrix".into(),
                expected: vec![n_classes, n_classes],
                got: vec![counts.len()],
            });
        }
        Ok(Self { n_classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class * self.n_classes + predicted] += 1;
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.n_classes != other.n_classes {
            return Err(Error::ShapeMismatch {
                context: "confusion matrix merge".into(),
                expected: vec![self.n_classes],
                got: vec![other.n_classes],
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

/// Per-class recall/precision plus their means over the classes present in
/// the evaluated test data.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub confusion: ConfusionMatrix,
    pub per_class_recall: Vec<f64>,
    pub per_class_precision: Vec<f64>,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub classes_present: Vec<bool>,
}

/// recall = TP/(TP+FN), precision = TP/(TP+FP); both 0 when the denominator
/// is 0. Means run over classes present in the test data (nonzero row sum);
/// a present class with zero predicted positives still counts in the mean.
pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Metrics {
    let k = cm.n_classes();
    let mut recall = vec![0.0; k];
    let mut precision = vec![0.0; k];
    let mut present = vec![false; k];
    for c in 0..k {
        let tp = cm.count(c, c) as f64;
        let row: f64 = (0..k).map(|p| cm.count(c, p) as f64).sum();
        let col: f64 = (0..k).map(|t| cm.count(t, c) as f64).sum();
        present[c] = row > 0.0;
        recall[c] = if row > 0.0 { tp / row } else { 0.0 };
        precision[c] = if col > 0.0 { tp / col } else { 0.0 };
    }
    let n_present = present.iter().filter(|&&p| p).count().max(1) as f64;
    let mean_over = |v: &[f64]| {
        v.iter()
            .zip(&present)
            .filter(|(_, &p)| p)
            .map(|(x, _)| x)
            .sum::<f64>()
            / n_present
    };
    Metrics {
        mean_recall: mean_over(&recall),
        mean_precision: mean_over(&precision),
        per_class_recall: recall,
        per_class_precision: precision,
        classes_present: present,
        confusion: cm.clone(),
    }
}

/// Argmax classification of the test set (ties resolve to the lowest class
/// index), then confusion-matrix metrics.
pub fn evaluate(params: &ModelParams, test: &Dataset) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::EmptyInput("evaluate on empty test set".into()));
    }
    let rows: Vec<Vec<f64>> = (0..test.len()).map(|i| test.sample_f64(i)).collect();
    let batch = Tensor::from_rows(&rows)?;
    let (logits, _) = params.forward(&batch, ForwardMode::Classify)?;
    if logits.cols() < test.n_classes {
        return Err(Error::InvalidConfig(format!(
            "classifier emits {} logits but the test set has {} classes",
            logits.cols(),
            test.n_classes
        )));
    }
    let mut cm = ConfusionMatrix::new(test.n_classes);
    for (i, &label) in test.labels.iter().enumerate() {
        let row = logits.row(i);
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        cm.record(usize::from(label), best);
    }
    Ok(metrics_from_confusion(&cm))
}

/// How per-device metrics combine into one summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateMode {
    /// Unweighted mean of device-level means.
    Local,
    /// Pool all confusion matrices, then take class means.
    Federated,
}

pub fn aggregate_metrics(per_device: &[Metrics], mode: AggregateMode) -> Result<Metrics> {
    let first = per_device
        .first()
        .ok_or_else(|| Error::EmptyInput("aggregate_metrics over no devices".into()))?;
    let k = first.confusion.n_classes();
    let mut pooled = ConfusionMatrix::new(k);
    for m in per_device {
        pooled.merge(&m.confusion)?;
    }
    match mode {
        AggregateMode::Federated => Ok(metrics_from_confusion(&pooled)),
        AggregateMode::Local => {
            let n = per_device.len() as f64;
            let mut per_class_recall = vec![0.0; k];
            let mut per_class_precision = vec![0.0; k];
            let mut present_counts = vec![0usize; k];
            for m in per_device {
                for c in 0..k {
                    if m.classes_present[c] {
                        per_class_recall[c] += m.per_class_recall[c];
                        per_class_precision[c] += m.per_class_precision[c];
                        present_counts[c] += 1;
                    }
                }
            }
            for c in 0..k {
                if present_counts[c] > 0 {
                    per_class_recall[c] /= present_counts[c] as f64;
                    per_class_precision[c] /= present_counts[c] as f64;
                }
            }
            Ok(Metrics {
                confusion: pooled,
                per_class_recall,
                per_class_precision,
                mean_recall: per_device.iter().map(|m| m.mean_recall).sum::<f64>() / n,
                mean_precision: per_device.iter().map(|m| m.mean_precision).sum::<f64>() / n,
                classes_present: present_counts.iter().map(|&c| c > 0).collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_two_class_example() {
        // [[2, 0], [1, 1]]: recall (1.0, 0.5) mean 0.75;
        // precision (2/3, 1.0) mean 5/6.
        let cm = ConfusionMatrix::from_counts(2, vec![2, 0, 1, 1]).unwrap();
        let m = metrics_from_confusion(&cm);
        assert_eq!(m.per_class_recall, vec![1.0, 0.5]);
        assert_eq!(m.mean_recall, 0.75);
        assert!((m.per_class_precision[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class_precision[1], 1.0);
        assert!((m.mean_precision - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let cm = ConfusionMatrix::from_counts(3, vec![4, 0, 0, 0, 2, 0, 0, 0, 5]).unwrap();
        let m = metrics_from_confusion(&cm);
        assert_eq!(m.mean_recall, 1.0);
        assert_eq!(m.mean_precision, 1.0);
        assert_eq!(m.classes_present, vec![true; 3]);
    }

    #[test]
    fn constant_predictor_on_balanced_two_classes() {
        // Everything predicted as class 0: recalls (1, 0) → mean 0.5.
        let cm = ConfusionMatrix::from_counts(2, vec![5, 0, 5, 0]).unwrap();
        let m = metrics_from_confusion(&cm);
        assert_eq!(m.mean_recall, 0.5);
        // Class 1 never predicted: precision 0, still counted.
        assert_eq!(m.per_class_precision[1], 0.0);
    }

    #[test]
    fn absent_class_is_excluded_from_means() {
        let cm = ConfusionMatrix::from_counts(3, vec![2, 0, 0, 0, 2, 0, 0, 0, 0]).unwrap();
        let m = metrics_from_confusion(&cm);
        assert_eq!(m.classes_present, vec![true, true, false]);
        assert_eq!(m.mean_recall, 1.0);
    }

    #[test]
    fn local_aggregation_is_mean_of_device_means() {
        let a = metrics_from_confusion(&ConfusionMatrix::from_counts(2, vec![1, 4, 0, 5]).unwrap());
        let b = metrics_from_confusion(&ConfusionMatrix::from_counts(2, vec![4, 1, 5, 0]).unwrap());
        let agg = aggregate_metrics(&[a.clone(), b.clone()], AggregateMode::Local).unwrap();
        assert!((agg.mean_recall - (a.mean_recall + b.mean_recall) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn federated_aggregation_pools_confusions() {
        let a = metrics_from_confusion(&ConfusionMatrix::from_counts(2, vec![2, 0, 1, 1]).unwrap());
        let b = metrics_from_confusion(&ConfusionMatrix::from_counts(2, vec![0, 2, 1, 1]).unwrap());
        let agg = aggregate_metrics(&[a, b], AggregateMode::Federated).unwrap();
        let pooled =
            metrics_from_confusion(&ConfusionMatrix::from_counts(2, vec![2, 2, 2, 2]).unwrap());
        assert_eq!(agg, pooled);
    }

    #[test]
    fn single_device_aggregation_is_identity() {
        let a = metrics_from_confusion(&ConfusionMatrix::from_counts(2, vec![2, 0, 1, 1]).unwrap());
        for mode in [AggregateMode::Local, AggregateMode::Federated] {
            let agg = aggregate_metrics(&[a.clone()], mode).unwrap();
            assert_eq!(agg.mean_recall, a.mean_recall);
            assert_eq!(agg.mean_precision, a.mean_precision);
        }
    }
}
