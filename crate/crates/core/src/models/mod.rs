//! Regressors: tree ensembles, a small MLP, the patch-style hybrid network,
//! and weighted voting over fitted members.

mod config;
mod ensemble;
mod hybrid;
mod mlp;
mod select;
mod tree;
mod voting;

pub use config::{Checkpoint, FittedModel, ModelConfig, NetRegressor, Regressor, VotingMember, CHECKPOINT_FORMAT};
pub use ensemble::{fit_gbdt, fit_rf, EnsembleMode, TreeEnsemble, TreeEnsembleConfig};
pub use hybrid::{hybrid_param_count, DEFAULT_ENCODING_SCALE, HybridConfig, HybridGradient, HybridModel};
pub use mlp::{mlp_layer_dims, mlp_param_count, Mlp, MlpSpec};
pub use select::{rank_features, select_features, RankedFeature, SelectConfig, SelectStep, SelectionReport};
pub use tree::{Tree, TreeNode};
pub use voting::voting_predict;

use crate::error::Result;

/// A scalar-output model with a flat, differentiable parameter vector.
pub trait Network: Clone + Send + Sync {
    fn input_dim(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn forward(&self, x: &[f64]) -> Result<f64>;
    /// Output and `upstream * d output / d params`.
    fn backward(&self, x: &[f64], upstream: f64) -> Result<(f64, Vec<f64>)>;
}
