use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MeanStd, Metrics};
use crate::error::{Error, Result};
use crate::ingest::{FeatureMatrix, FoldPlan, NormStats};
use crate::models::{ModelConfig, Regressor};
use crate::par;
use crate::rng::derive_seed;

/// What a model factory sees for one fold: the normalized training split
/// and the statistics it was normalized with.
pub struct FitContext<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [f64],
    pub normalizer: &'a NormStats,
    pub iteration: usize,
    pub fold: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub iteration: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test: Metrics,
    pub train: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub n_folds: usize,
    pub n_iterations: usize,
    pub n_evaluations: usize,
    pub r2: MeanStd,
    pub mae: MeanStd,
    pub rmse: MeanStd,
    pub train_r2: MeanStd,
    pub train_mae: MeanStd,
    pub train_rmse: MeanStd,
    pub evaluations: Vec<Evaluation>,
}

impl CvSummary {
    fn from_evaluations(plan: &FoldPlan, evaluations: Vec<Evaluation>) -> Self {
        let stat = |f: &dyn Fn(&Evaluation) -> f64| MeanStd::of(&evaluations.iter().map(f).collect::<Vec<_>>());
        Self {
            n_folds: plan.n_folds,
            n_iterations: plan.n_iterations,
            n_evaluations: evaluations.len(),
            r2: stat(&|e| e.test.r2),
            mae: stat(&|e| e.test.mae),
            rmse: stat(&|e| e.test.rmse),
            train_r2: stat(&|e| e.train.r2),
            train_mae: stat(&|e| e.train.mae),
            train_rmse: stat(&|e| e.train.rmse),
            evaluations,
        }
    }
}

/// Repeated k-fold evaluation. For every (iteration, fold) the normalizer
/// is fitted on the training rows only, the factory fits a model on the
/// normalized training split, and both splits are scored. Evaluations run
/// in parallel; each gets seed `derive_seed(seed, iteration * n_folds + fold)`.
pub fn cross_validate<R, F>(factory: F, x: &FeatureMatrix, y: &[f64], plan: &FoldPlan, seed: u64) -> Result<CvSummary>
where
    R: Regressor,
    F: Fn(&FitContext) -> Result<R> + Sync + Send,
{
    if plan.n_rows() != x.n_rows() || y.len() != x.n_rows() {
        return Err(Error::Dimension {
            context: "cross-validation rows",
            expected: plan.n_rows(),
            got: x.n_rows().max(y.len()),
        });
    }
    for it in 0..plan.n_iterations {
        for (f, size) in plan.fold_sizes(it).into_iter().enumerate() {
            if size < 2 {
                return Err(Error::invalid(format!(
                    "fold {f} of iteration {it} has {size} test rows; at least 2 are needed"
                )));
            }
        }
    }
    let values = x.values();
    let evaluations = par::try_map_range(plan.n_iterations * plan.n_folds, |k| {
        let (it, fold) = (k / plan.n_folds, k % plan.n_folds);
        let train_rows = plan.train_rows(it, fold);
        let test_rows = plan.test_rows(it, fold);
        let norm = NormStats::fit(values, &train_rows, x.column_names())?;
        let x_train = norm.transform(values.select(Axis(0), &train_rows).view())?;
        let x_test = norm.transform(values.select(Axis(0), &test_rows).view())?;
        let y_train: Vec<f64> = train_rows.iter().map(|&r| y[r]).collect();
        let y_test: Vec<f64> = test_rows.iter().map(|&r| y[r]).collect();
        let ctx = FitContext {
            x: x_train.view(),
            y: &y_train,
            normalizer: &norm,
            iteration: it,
            fold,
            seed: derive_seed(seed, k as u64),
        };
        let model = factory(&ctx)?;
        Ok(Evaluation {
            iteration: it,
            fold,
            n_train: train_rows.len(),
            n_test: test_rows.len(),
            test: score(&model, &x_test, &y_test)?,
            train: score(&model, &x_train, &y_train)?,
        })
    })?;
    Ok(CvSummary::from_evaluations(plan, evaluations))
}

fn score<R: Regressor>(model: &R, x: &Array2<f64>, y: &[f64]) -> Result<Metrics> {
    let pred = model.predict(x.view())?;
    if let Some(p) = pred.iter().find(|p| !p.is_finite()) {
        return Err(Error::Numeric(format!("model produced a non-finite prediction ({p})")));
    }
    compute_metrics(y, &pred)
}

/// [`cross_validate`] with a declarative model config.
pub fn cross_validate_config(cfg: &ModelConfig, x: &FeatureMatrix, y: &[f64], plan: &FoldPlan, seed: u64) -> Result<CvSummary> {
    cross_validate(|ctx| cfg.fit(ctx.x, ctx.y, ctx.seed), x, y, plan, seed)
}
