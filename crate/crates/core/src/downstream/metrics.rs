use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::downstream::forest::ForestModel;
use crate::error::{Error, Result};
use crate::subset::FeatureSubset;

/// Classification metrics. `confusion[truth][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl MetricReport {
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Self {
        let k = confusion.len();
        let total: u64 = confusion.iter().flatten().sum();
        let tp: u64 = (0..k).map(|c| confusion[c][c]).sum();
        let accuracy = ratio(tp, total);

        // Micro averaging pools TP/FP/FN over classes; each misclassification
        // is one FP and one FN.
        let errors = total - tp;
        let f1_micro = f1(ratio(tp, tp + errors), ratio(tp, tp + errors));

        let mut report = MetricReport { accuracy, f1_macro: 0.0, f1_micro, confusion };
        // Macro F1 averages over classes seen in either truth or prediction.
        let present: Vec<usize> = (0..k)
            .filter(|&c| report.confusion[c].iter().sum::<u64>() > 0 || (0..k).any(|t| report.confusion[t][c] > 0))
            .collect();
        if !present.is_empty() {
            report.f1_macro = present.iter().map(|&c| report.class_scores(c).f1).sum::<f64>() / present.len() as f64;
        }
        report
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Self {
        let mut confusion = vec![vec![0u64; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        Self::from_confusion(confusion)
    }

    /// One-vs-rest precision, recall and F1 for class `c`.
    pub fn class_scores(&self, c: usize) -> ClassScores {
        let k = self.confusion.len();
        let tp = self.confusion[c][c];
        let fp: u64 = (0..k).filter(|&t| t != c).map(|t| self.confusion[t][c]).sum();
        let fn_: u64 = (0..k).filter(|&p| p != c).map(|p| self.confusion[c][p]).sum();
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassScores { precision, recall, f1: f1(precision, recall) }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

/// Scores `model` on `test`. The subset must be the one the model was fit on.
pub fn evaluate(model: &ForestModel, test: &Dataset, subset: &FeatureSubset) -> Result<MetricReport> {
    if model.subset() != subset {
        return Err(Error::SubsetMismatch);
    }
    let predicted = model.predict(test);
    Ok(MetricReport::from_predictions(test.labels(), &predicted, test.n_classes()))
}
