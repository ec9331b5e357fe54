use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::optim::{Optimizer, OptimizerConfig};
use crate::error::{Error, Result};
use crate::models::Network;
use crate::par;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Stop once the epoch loss has not improved for this many epochs.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Mean squared error over each epoch, measured on the minibatches as they
/// were visited (before the step that follows each batch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss: Vec<f64>,
    pub stopped_early: bool,
}

/// Minibatch descent on mean squared error. Per-sample gradients are
/// computed in parallel and summed in sample order, so the trace only
/// depends on the seed.
pub fn train_network<N: Network>(model: &mut N, x: ArrayView2<f64>, y: &[f64], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::Dimension {
            context: "training targets",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("training needs at least one row"));
    }
    if x.ncols() < model.input_dim() {
        return Err(Error::Dimension {
            context: "training features",
            expected: model.input_dim(),
            got: x.ncols(),
        });
    }
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    let n_params = model.params().len();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, n_params);
    let mut rng = seeded(cfg.seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut loss = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut grad = vec![0.0; n_params];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let m = &*model;
            let per_sample = par::try_map_range(batch.len(), |i| m.backward(&rows[batch[i]], 1.0))?;
            grad.fill(0.0);
            let scale = 2.0 / batch.len() as f64;
            for (&r, (out, g)) in batch.iter().zip(&per_sample) {
                let e = out - y[r];
                total += e * e;
                let w = scale * e;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += w * b;
                }
            }
            opt.step(model.params_mut(), &grad);
        }
        let epoch_loss = total / y.len() as f64;
        if !epoch_loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, loss: epoch_loss });
        }
        loss.push(epoch_loss);
        if let Some(p) = cfg.patience {
            if epoch_loss < best {
                best = epoch_loss;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= p {
                    return Ok(TrainReport { loss, stopped_early: true });
                }
            }
        }
    }
    Ok(TrainReport {
        loss,
        stopped_early: false,
    })
}
