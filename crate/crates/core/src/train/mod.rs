//! Metrics, optimizers, minibatch training, repeated k-fold
//! cross-validation and grid search.

mod cv;
mod fit;
mod grid;
mod metrics;
mod optim;

pub use cv::{cross_validate, cross_validate_config, CvSummary, Evaluation, FitContext};
pub use fit::{train_network, TrainConfig, TrainReport};
pub use grid::{expand_grid, grid_search, GridResult, GridRow, ParamGrid};
pub use metrics::{compute_metrics, MeanStd, Metrics};
pub use optim::{Optimizer, OptimizerConfig};
