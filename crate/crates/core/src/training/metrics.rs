use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Classification metrics over one set of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Root mean squared error of the class-1 probability, in `[0, 1]`.
    pub rmse: f64,
    pub n: usize,
}

impl MetricReport {
    /// RMSE on a 0-100 scale.
    pub fn rmse_pct(&self) -> f64 {
        self.rmse * 100.0
    }
}

/// Per-class F1 from counts; 0 when the class never occurs in either the
/// labels or the predictions.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Metrics for labels and class-1 probabilities. The prediction is class 1
/// only when `p > 0.5`.
pub fn compute_metrics(labels: &[Label], p_fake: &[f64]) -> Result<MetricReport> {
    if labels.is_empty() {
        return Err(Error::Invalid("cannot evaluate an empty record set".into()));
    }
    if labels.len() != p_fake.len() {
        return Err(Error::Shape(format!("{} labels but {} predictions", labels.len(), p_fake.len())));
    }
    // confusion[true][pred]
    let mut confusion = [[0usize; 2]; 2];
    let mut sq = 0.0;
    for (&y, &p) in labels.iter().zip(p_fake) {
        let pred = usize::from(p > 0.5);
        confusion[y.index()][pred] += 1;
        let err = p - y.index() as f64;
        sq += err * err;
    }
    let n = labels.len();
    let correct = confusion[0][0] + confusion[1][1];
    let f1_true = f1(confusion[0][0], confusion[1][0], confusion[0][1]);
    let f1_fake = f1(confusion[1][1], confusion[0][1], confusion[1][0]);
    Ok(MetricReport {
        accuracy: correct as f64 / n as f64,
        macro_f1: (f1_true + f1_fake) / 2.0,
        rmse: (sq / n as f64).sqrt(),
        n,
    })
}

/// Arithmetic mean of each metric; `n` is summed.
pub fn mean_report(reports: &[MetricReport]) -> Result<MetricReport> {
    if reports.is_empty() {
        return Err(Error::Invalid("no reports to average".into()));
    }
    let k = reports.len() as f64;
    Ok(MetricReport {
        accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / k,
        macro_f1: reports.iter().map(|r| r.macro_f1).sum::<f64>() / k,
        rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / k,
        n: reports.iter().map(|r| r.n).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub folds: Vec<MetricReport>,
    pub mean: MetricReport,
}

impl MetricsFile {
    pub fn new(folds: Vec<MetricReport>) -> Result<Self> {
        let mean = mean_report(&folds)?;
        Ok(MetricsFile { folds, mean })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("metrics serialize");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn perfect() {
        let r = compute_metrics(&[True, Fake], &[0.0, 1.0]).unwrap();
        assert_eq!((r.accuracy, r.macro_f1, r.rmse), (1.0, 1.0, 0.0));
    }

    #[test]
    fn one_class_predicted() {
        let r = compute_metrics(&[True, Fake], &[0.2, 0.2]).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.rmse - (0.34f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_half() {
        let r = compute_metrics(&[True, Fake, Fake], &[0.5; 3]).unwrap();
        assert!((r.rmse - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(compute_metrics(&[], &[]).is_err());
    }
}
