use std::fmt;

use serde::{Deserialize, Serialize};

use super::loss::mean_bce;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// `confusion[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub threshold: f64,
    pub classes: [ClassMetrics; 2],
    pub accuracy: f64,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
    pub confusion: [[usize; 2]; 2],
    pub mean_loss: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl MetricsReport {
    /// Prediction is class 1 iff `probability >= threshold`.
    pub fn from_predictions(probabilities: &[f64], labels: &[u8], threshold: f64) -> Result<Self> {
        if probabilities.is_empty() || probabilities.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} predictions for {} labels",
                probabilities.len(),
                labels.len()
            )));
        }
        let mut confusion = [[0usize; 2]; 2];
        for (&p, &y) in probabilities.iter().zip(labels) {
            confusion[usize::from(y != 0)][usize::from(p >= threshold)] += 1;
        }
        let mut report = Self::from_confusion(confusion)?;
        report.threshold = threshold;
        report.mean_loss = mean_bce(probabilities, labels);
        Ok(report)
    }

    /// Metrics of a confusion matrix; `mean_loss` is left at zero.
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> Result<Self> {
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::Input("empty evaluation".into()));
        }
        let class = |c: usize| {
            let tp = confusion[c][c];
            let predicted = confusion[0][c] + confusion[1][c];
            let support = confusion[c][0] + confusion[c][1];
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassMetrics { precision, recall, f1: harmonic(precision, recall), support }
        };
        let classes = [class(0), class(1)];
        let avg = |weight: &dyn Fn(&ClassMetrics) -> f64| {
            let w: f64 = classes.iter().map(weight).sum();
            let f = |get: fn(&ClassMetrics) -> f64| {
                classes.iter().map(|c| weight(c) * get(c)).sum::<f64>() / w
            };
            ClassMetrics {
                precision: f(|c| c.precision),
                recall: f(|c| c.recall),
                f1: f(|c| c.f1),
                support: total,
            }
        };
        Ok(MetricsReport {
            threshold: 0.5,
            accuracy: ratio(confusion[0][0] + confusion[1][1], total),
            macro_avg: avg(&|_| 1.0),
            weighted_avg: avg(&|c| c.support as f64),
            classes,
            confusion,
            mean_loss: 0.0,
        })
    }

    pub fn total(&self) -> usize {
        self.classes[0].support + self.classes[1].support
    }
}

/// Classification-report style table.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>14} {:>9} {:>9} {:>9} {:>9}", "", "precision", "recall", "f1-score", "support")?;
        writeln!(f)?;
        for (i, c) in self.classes.iter().enumerate() {
            writeln!(f, "{i:>14} {:>9.2} {:>9.2} {:>9.2} {:>9}", c.precision, c.recall, c.f1, c.support)?;
        }
        writeln!(f)?;
        writeln!(f, "{:>14} {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", self.accuracy, self.total())?;
        for (name, c) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            writeln!(f, "{name:>14} {:>9.2} {:>9.2} {:>9.2} {:>9}", c.precision, c.recall, c.f1, c.support)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_formulas() {
        // TP=9 FP=1 FN=3 TN=7
        let r = MetricsReport::from_confusion([[7, 1], [3, 9]]).unwrap();
        assert!((r.classes[1].precision - 0.9).abs() < 1e-12);
        assert!((r.classes[1].recall - 0.75).abs() < 1e-12);
        assert!((r.classes[1].f1 - 0.8182).abs() < 1e-4);
        assert_eq!(r.total(), 20);
        assert!((r.weighted_avg.recall - r.accuracy).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let r = MetricsReport::from_predictions(&[0.1, 0.9, 0.7, 0.2], &[0, 1, 1, 0], 0.5).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for c in r.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        let table = r.to_string();
        for row in ["accuracy", "macro avg", "weighted avg"] {
            assert!(table.contains(row));
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        let r = MetricsReport::from_predictions(&[0.5], &[1], 0.5).unwrap();
        assert_eq!(r.confusion[1][1], 1);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(MetricsReport::from_predictions(&[], &[], 0.5).is_err());
    }
}
