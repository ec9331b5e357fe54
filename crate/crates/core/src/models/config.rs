use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{fit_gbdt, fit_rf, voting_predict, HybridConfig, HybridModel, Mlp, Network, TreeEnsemble, TreeEnsembleConfig};
use crate::error::{Error, Result};
use crate::ingest::NormStats;
use crate::par;
use crate::rng::{derive_seed, seeded};
use crate::train::{train_network, TrainConfig};

/// Anything that maps a feature row to a scalar prediction.
pub trait Regressor: Send + Sync {
    fn predict_row(&self, x: &[f64]) -> Result<f64>;

    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        par::try_map_range(x.nrows(), |i| self.predict_row(&x.row(i).to_vec()))
    }
}

impl Regressor for TreeEnsemble {
    fn predict_row(&self, x: &[f64]) -> Result<f64> {
        TreeEnsemble::predict_row(self, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingMember {
    pub model: ModelConfig,
    pub weight: f64,
}

/// What to fit. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Gbdt(TreeEnsembleConfig),
    RandomForest(TreeEnsembleConfig),
    Mlp {
        #[serde(default)]
        train: TrainConfig,
    },
    Hybrid {
        hybrid: HybridConfig,
        #[serde(default)]
        train: TrainConfig,
    },
    Voting {
        members: Vec<VotingMember>,
    },
}

impl ModelConfig {
    pub fn gbdt() -> Self {
        ModelConfig::Gbdt(TreeEnsembleConfig::gbdt())
    }

    pub fn random_forest() -> Self {
        ModelConfig::RandomForest(TreeEnsembleConfig::random_forest())
    }

    /// GBDT and random forest weighted 1.5 : 1.
    pub fn default_voting() -> Self {
        ModelConfig::Voting {
            members: vec![
                VotingMember {
                    model: Self::gbdt(),
                    weight: 1.5,
                },
                VotingMember {
                    model: Self::random_forest(),
                    weight: 1.0,
                },
            ],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Gbdt(_) => "gbdt",
            ModelConfig::RandomForest(_) => "random_forest",
            ModelConfig::Mlp { .. } => "mlp",
            ModelConfig::Hybrid { .. } => "hybrid",
            ModelConfig::Voting { .. } => "voting",
        }
    }

    /// Fits on already-normalized features. `seed` drives every random
    /// choice (it replaces any seed inside a nested training config).
    pub fn fit(&self, x: ArrayView2<f64>, y: &[f64], seed: u64) -> Result<FittedModel> {
        Ok(match self {
            ModelConfig::Gbdt(c) => FittedModel::Ensemble(fit_gbdt(c, x, y)?),
            ModelConfig::RandomForest(c) => FittedModel::Ensemble(fit_rf(c, x, y, seed)?),
            ModelConfig::Mlp { train } => {
                let net = Mlp::init(x.ncols(), &mut seeded(derive_seed(seed, 0)));
                FittedModel::Mlp(NetRegressor::fit(net, x, y, train, derive_seed(seed, 1))?)
            }
            ModelConfig::Hybrid { hybrid, train } => {
                let net = HybridModel::new(hybrid, derive_seed(seed, 0))?;
                FittedModel::Hybrid(NetRegressor::fit(net, x, y, train, derive_seed(seed, 1))?)
            }
            ModelConfig::Voting { members } => {
                if members.is_empty() {
                    return Err(Error::invalid("a voting ensemble needs at least one member"));
                }
                let total: f64 = members.iter().map(|m| m.weight).sum();
                if members.iter().any(|m| !(m.weight.is_finite() && m.weight >= 0.0)) || total <= 0.0 {
                    return Err(Error::invalid("voting weights must be non-negative and sum to a positive value"));
                }
                let fitted = members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| Ok((m.model.fit(x, y, derive_seed(seed, 100 + i as u64))?, m.weight)))
                    .collect::<Result<Vec<_>>>()?;
                FittedModel::Voting(fitted)
            }
        })
    }
}

/// A network trained on standardized targets; predictions are mapped back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetRegressor<N> {
    pub net: N,
    pub y_mean: f64,
    pub y_std: f64,
    /// Per-epoch training loss in standardized units.
    #[serde(default)]
    pub loss: Vec<f64>,
}

impl<N: Network> NetRegressor<N> {
    pub fn fit(mut net: N, x: ArrayView2<f64>, y: &[f64], train: &TrainConfig, seed: u64) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::invalid("network training needs at least 2 rows"));
        }
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n;
        let y_std = if var > 0.0 { var.sqrt() } else { 1.0 };
        let scaled: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();
        let cfg = TrainConfig { seed, ..*train };
        let report = train_network(&mut net, x, &scaled, &cfg)?;
        Ok(Self {
            net,
            y_mean,
            y_std,
            loss: report.loss,
        })
    }
}

impl<N: Network> Regressor for NetRegressor<N> {
    fn predict_row(&self, x: &[f64]) -> Result<f64> {
        let need = self.net.input_dim();
        if x.len() < need {
            return Err(Error::Dimension {
                context: "network input",
                expected: need,
                got: x.len(),
            });
        }
        Ok(self.y_mean + self.y_std * self.net.forward(x)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Ensemble(TreeEnsemble),
    Mlp(NetRegressor<Mlp>),
    Hybrid(NetRegressor<HybridModel>),
    Voting(Vec<(FittedModel, f64)>),
}

impl FittedModel {
    /// Training loss trace for networks.
    pub fn loss(&self) -> Option<&[f64]> {
        match self {
            FittedModel::Mlp(m) => Some(&m.loss),
            FittedModel::Hybrid(m) => Some(&m.loss),
            _ => None,
        }
    }

    /// Gain importances of a tree ensemble.
    pub fn feature_importance(&self) -> Option<&[f64]> {
        match self {
            FittedModel::Ensemble(e) => Some(e.feature_importance()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FittedModel::Ensemble(e) => e.validate_loaded(),
            FittedModel::Mlp(_) | FittedModel::Hybrid(_) => Ok(()),
            FittedModel::Voting(m) => {
                for (f, _) in m {
                    f.validate()?;
                }
                Ok(())
            }
        }
    }
}

impl Regressor for FittedModel {
    fn predict_row(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedModel::Ensemble(e) => e.predict_row(x),
            FittedModel::Mlp(m) => m.predict_row(x),
            FittedModel::Hybrid(m) => m.predict_row(x),
            FittedModel::Voting(members) => {
                let preds = members
                    .iter()
                    .map(|(m, _)| Ok(vec![m.predict_row(x)?]))
                    .collect::<Result<Vec<_>>>()?;
                let weights: Vec<f64> = members.iter().map(|(_, w)| *w).collect();
                Ok(voting_predict(&preds, &weights)?[0])
            }
        }
    }
}

pub const CHECKPOINT_FORMAT: u32 = 1;

/// Versioned, self-contained model file: the config that produced it, the
/// fitted parameters, and the normalizer to apply to raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub kind: String,
    pub spec: ModelConfig,
    pub parameters: FittedModel,
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub normalizer: Option<NormStats>,
}

impl Checkpoint {
    pub fn new(spec: ModelConfig, parameters: FittedModel, feature_names: Vec<String>, normalizer: Option<NormStats>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT,
            kind: spec.kind().to_string(),
            spec,
            parameters,
            feature_names,
            normalizer,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks the format version before decoding the rest.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let found = raw
            .get("format")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::invalid("checkpoint has no numeric `format` field"))?;
        if found != CHECKPOINT_FORMAT as u64 {
            return Err(Error::FormatVersion {
                found: found.min(u32::MAX as u64) as u32,
                expected: CHECKPOINT_FORMAT,
            });
        }
        let ck: Checkpoint = serde_json::from_value(raw)?;
        if ck.kind != ck.spec.kind() {
            return Err(Error::invalid(format!(
                "checkpoint kind `{}` does not match its spec `{}`",
                ck.kind,
                ck.spec.kind()
            )));
        }
        ck.parameters.validate()?;
        Ok(ck)
    }

    /// Normalizes raw feature rows (if a normalizer is stored) and predicts.
    pub fn predict_raw(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        match &self.normalizer {
            Some(n) => {
                let z = n.transform(x)?;
                self.parameters.predict(z.view())
            }
            None => self.parameters.predict(x),
        }
    }
}
