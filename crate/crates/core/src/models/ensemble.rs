use ndarray::ArrayView2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, GrowParams, SortedColumns, Tree};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    Gbdt,
    RandomForest,
}

/// Hyper-parameters shared by boosting and forests. `learning_rate` only
/// affects boosting; `feature_subsample` (fraction of features tried per
/// node) and `bootstrap` only affect forests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeEnsembleConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub feature_subsample: f64,
    pub bootstrap: bool,
}

impl Default for TreeEnsembleConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: Some(3),
            learning_rate: 0.1,
            min_samples_leaf: 1,
            feature_subsample: 1.0 / 3.0,
            bootstrap: true,
        }
    }
}

impl TreeEnsembleConfig {
    pub fn gbdt() -> Self {
        Self::default()
    }

    pub fn random_forest() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            ..Self::default()
        }
    }

    fn validate(&self, mode: EnsembleMode) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("an ensemble needs at least one tree"));
        }
        if mode == EnsembleMode::Gbdt && !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if mode == EnsembleMode::RandomForest && !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(Error::invalid(format!(
                "feature_subsample must be in (0, 1], got {}",
                self.feature_subsample
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    mode: EnsembleMode,
    n_features: usize,
    base: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
    importances: Vec<f64>,
    /// Training MSE after each boosting round; empty for forests.
    #[serde(default)]
    train_loss: Vec<f64>,
}

fn check_data(x: ArrayView2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension {
            context: "ensemble targets",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() < 2 {
        return Err(Error::invalid("tree ensembles need at least 2 rows"));
    }
    if x.ncols() == 0 {
        return Err(Error::invalid("tree ensembles need at least one feature"));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("target {i} is not finite")));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("feature matrix contains NaN"));
    }
    Ok(())
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.iter().map(|v| v / total).collect()
    } else {
        raw
    }
}

/// Mean computed as an offset from the first value, so a constant vector
/// gives that constant exactly.
fn robust_mean(y: &[f64]) -> f64 {
    let first = y[0];
    first + y.iter().map(|v| v - first).sum::<f64>() / y.len() as f64
}

/// Squared-error gradient boosting. Each round fits a depth-limited tree to
/// the current residuals.
pub fn fit_gbdt(cfg: &TreeEnsembleConfig, x: ArrayView2<f64>, y: &[f64]) -> Result<TreeEnsemble> {
    cfg.validate(EnsembleMode::Gbdt)?;
    check_data(x, y)?;
    let n = y.len();
    let sorted = SortedColumns::new(x);
    let base = robust_mean(y);
    let params = GrowParams {
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: None,
    };
    let ones = vec![1.0; n];
    let mut raw = vec![0.0; x.ncols()];
    let mut pred = vec![base; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut train_loss = Vec::with_capacity(cfg.n_trees);
    let mut residual = vec![0.0; n];
    for _ in 0..cfg.n_trees {
        for i in 0..n {
            residual[i] = y[i] - pred[i];
        }
        let tree = grow_tree(x, &residual, &ones, &sorted, params, None, &mut raw);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += cfg.learning_rate * tree.predict_at(x, i);
        }
        train_loss.push(pred.iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / n as f64);
        trees.push(tree);
    }
    Ok(TreeEnsemble {
        mode: EnsembleMode::Gbdt,
        n_features: x.ncols(),
        base,
        learning_rate: cfg.learning_rate,
        trees,
        importances: normalized(raw),
        train_loss,
    })
}

/// Bagged regression trees with per-node feature subsampling. Tree `t` draws
/// its bootstrap and feature subsets from `derive_seed(seed, t)`.
pub fn fit_rf(cfg: &TreeEnsembleConfig, x: ArrayView2<f64>, y: &[f64], seed: u64) -> Result<TreeEnsemble> {
    cfg.validate(EnsembleMode::RandomForest)?;
    check_data(x, y)?;
    let n = y.len();
    let p = x.ncols();
    let sorted = SortedColumns::new(x);
    let k = ((cfg.feature_subsample * p as f64).round() as usize).clamp(1, p);
    let params = GrowParams {
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: Some(k),
    };
    let fitted = par::map_range(cfg.n_trees, |t| {
        let mut rng = seeded(derive_seed(seed, t as u64));
        let mut weights = vec![0.0; n];
        if cfg.bootstrap {
            for _ in 0..n {
                weights[rng.gen_range(0..n)] += 1.0;
            }
        } else {
            weights.fill(1.0);
        }
        let mut raw = vec![0.0; p];
        let tree = grow_tree(x, y, &weights, &sorted, params, Some(&mut rng), &mut raw);
        (tree, raw)
    });
    let mut raw = vec![0.0; p];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    for (tree, imp) in fitted {
        for (a, b) in raw.iter_mut().zip(&imp) {
            *a += b;
        }
        trees.push(tree);
    }
    Ok(TreeEnsemble {
        mode: EnsembleMode::RandomForest,
        n_features: p,
        base: 0.0,
        learning_rate: 1.0,
        trees,
        importances: normalized(raw),
        train_loss: Vec::new(),
    })
}

impl TreeEnsemble {
    pub fn mode(&self) -> EnsembleMode {
        self.mode
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Per-feature share of the total squared-error reduction; sums to 1
    /// unless no split was ever made.
    pub fn feature_importance(&self) -> &[f64] {
        &self.importances
    }

    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }

    pub fn predict_row(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                context: "ensemble input",
                expected: self.n_features,
                got: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        Ok(match self.mode {
            EnsembleMode::Gbdt => self.base + self.learning_rate * sum,
            EnsembleMode::RandomForest => sum / self.trees.len() as f64,
        })
    }

    pub(crate) fn validate_loaded(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::invalid("ensemble checkpoint has no trees"));
        }
        if self.importances.len() != self.n_features {
            return Err(Error::invalid("ensemble importances do not match its feature count"));
        }
        if let Some(f) = self.trees.iter().filter_map(|t| t.max_feature()).max() {
            if f >= self.n_features {
                return Err(Error::invalid(format!(
                    "tree splits on feature {f} but the model has {} features",
                    self.n_features
                )));
            }
        }
        Ok(())
    }
}
