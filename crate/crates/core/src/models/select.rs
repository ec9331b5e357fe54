use serde::{Deserialize, Serialize};

use super::{fit_gbdt, ModelConfig, TreeEnsembleConfig};
use crate::error::{Error, Result};
use crate::ingest::{make_folds, FeatureMatrix};
use crate::train::cross_validate_config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectConfig {
    /// Allowed relative MAE increase over the best subset seen so far.
    pub tolerance: f64,
    pub n_folds: usize,
    pub n_iterations: usize,
    /// Model whose gain importances give the ranking.
    pub importance_model: TreeEnsembleConfig,
    /// Model scored by cross-validation at every step.
    pub eval_model: ModelConfig,
    pub seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            tolerance: 0.02,
            n_folds: 5,
            n_iterations: 1,
            importance_model: TreeEnsembleConfig::gbdt(),
            eval_model: ModelConfig::Gbdt(TreeEnsembleConfig {
                n_trees: 100,
                ..TreeEnsembleConfig::gbdt()
            }),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectStep {
    pub n_features: usize,
    /// Column removed to reach this step; `None` for the full set.
    pub dropped: Option<String>,
    pub mae: f64,
    pub mae_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// All columns, most important first.
    pub ranking: Vec<RankedFeature>,
    /// Surviving columns in ranking order.
    pub retained: Vec<String>,
    pub trace: Vec<SelectStep>,
    pub best_mae: f64,
}

/// Backward elimination along the importance ranking: drop the least
/// important remaining column while the CV MAE stays within `tolerance` of
/// the best seen.
pub fn select_features(x: &FeatureMatrix, y: &[f64], cfg: &SelectConfig) -> Result<SelectionReport> {
    if x.n_cols() < 2 {
        return Err(Error::invalid(format!(
            "feature selection needs at least 2 columns, got {}",
            x.n_cols()
        )));
    }
    if !(cfg.tolerance >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be non-negative, got {}", cfg.tolerance)));
    }
    let ranking = rank_features(x, y, &cfg.importance_model)?;
    let plan = make_folds(x.n_rows(), cfg.n_folds, cfg.n_iterations, cfg.seed)?;
    let evaluate = |names: &[String]| -> Result<(f64, f64)> {
        let sub = x.select_named(names)?;
        let s = cross_validate_config(&cfg.eval_model, &sub, y, &plan, cfg.seed)?;
        Ok((s.mae.mean, s.mae.std))
    };

    let mut current: Vec<String> = ranking.iter().map(|r| r.name.clone()).collect();
    let (mae, mae_std) = evaluate(&current)?;
    let mut trace = vec![SelectStep {
        n_features: current.len(),
        dropped: None,
        mae,
        mae_std,
    }];
    let mut best = mae;
    while current.len() > 1 {
        let candidate = &current[..current.len() - 1];
        let (mae, mae_std) = evaluate(candidate)?;
        trace.push(SelectStep {
            n_features: candidate.len(),
            dropped: current.last().cloned(),
            mae,
            mae_std,
        });
        if mae > best * (1.0 + cfg.tolerance) {
            break;
        }
        current.pop();
        best = best.min(mae);
    }
    Ok(SelectionReport {
        ranking,
        retained: current,
        trace,
        best_mae: best,
    })
}

/// Gain importances of a boosted model fitted on all rows, descending;
/// equal scores keep column order.
pub fn rank_features(x: &FeatureMatrix, y: &[f64], model: &TreeEnsembleConfig) -> Result<Vec<RankedFeature>> {
    let fitted = fit_gbdt(model, x.values(), y)?;
    let imp = fitted.feature_importance();
    let mut order: Vec<usize> = (0..x.n_cols()).collect();
    order.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .map(|c| RankedFeature {
            name: x.column_names()[c].clone(),
            importance: imp[c],
        })
        .collect())
}
