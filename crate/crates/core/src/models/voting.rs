use crate::error::{Error, Result};

/// Row-wise weighted mean `sum w_i p_i / sum w_i` of member predictions.
pub fn voting_predict(member_preds: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if member_preds.is_empty() {
        return Err(Error::invalid("a voting ensemble needs at least one member"));
    }
    if member_preds.len() != weights.len() {
        return Err(Error::Dimension {
            context: "voting weights",
            expected: member_preds.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::invalid(format!("voting weights must be finite and non-negative, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("voting weights sum to zero"));
    }
    let n = member_preds[0].len();
    if let Some(p) = member_preds.iter().find(|p| p.len() != n) {
        return Err(Error::Dimension {
            context: "voting member predictions",
            expected: n,
            got: p.len(),
        });
    }
    if member_preds.len() == 1 {
        return Ok(member_preds[0].clone());
    }
    Ok((0..n)
        .map(|i| {
            member_preds
                .iter()
                .zip(weights)
                .map(|(p, w)| w * p[i])
                .sum::<f64>()
                / total
        })
        .collect())
}
