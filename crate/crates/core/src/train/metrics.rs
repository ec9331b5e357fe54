use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression scores in target units (kcal/mol for proton affinities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
}

pub fn compute_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            context: "metric predictions",
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::invalid("metrics need at least one value"));
    }
    let n = y_true.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (t, p) in y_true.iter().zip(y_pred) {
        let e = t - p;
        abs += e.abs();
        sq += e * e;
    }
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "r2",
            reason: "y_true has zero variance",
        });
    }
    Ok(Metrics {
        r2: 1.0 - sq / ss_tot,
        mae: abs / n,
        rmse: (sq / n).sqrt(),
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}
