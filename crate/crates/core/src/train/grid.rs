use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::cv::{cross_validate_config, CvSummary};
use crate::error::{Error, Result};
use crate::ingest::{FeatureMatrix, FoldPlan};
use crate::models::ModelConfig;

/// Axes of a grid: each entry is a dotted JSON path into the base config
/// (e.g. `train.learning_rate`) and its candidate values.
pub type ParamGrid = Vec<(String, Vec<Value>)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: Map<String, Value>,
    pub config: Option<ModelConfig>,
    /// `None` when the config failed to build or to train.
    pub summary: Option<CvSummary>,
    pub error: Option<String>,
}

impl GridRow {
    fn key(&self) -> (f64, f64) {
        match &self.summary {
            Some(s) if s.mae.mean.is_finite() => (s.mae.mean, s.rmse.mean),
            _ => (f64::INFINITY, f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: usize,
    pub rows: Vec<GridRow>,
}

impl GridResult {
    pub fn best_row(&self) -> &GridRow {
        &self.rows[self.best]
    }
}

fn set_path(root: &mut Value, path: &str, v: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::invalid(format!("grid path `{path}` does not address an object")))?;
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), v);
            return Ok(());
        }
        cur = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Every combination of the grid, first axis varying slowest.
pub fn expand_grid(base: &ModelConfig, grid: &ParamGrid) -> Result<Vec<(Map<String, Value>, Result<ModelConfig>)>> {
    if grid.iter().any(|(_, vs)| vs.is_empty()) {
        return Err(Error::invalid("every grid axis needs at least one value"));
    }
    let total: usize = grid.iter().map(|(_, v)| v.len()).product();
    let base = serde_json::to_value(base)?;
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut idx = vec![0; grid.len()];
        for a in (0..grid.len()).rev() {
            idx[a] = k % grid[a].1.len();
            k /= grid[a].1.len();
        }
        let mut v = base.clone();
        let mut params = Map::new();
        let mut built = Ok(());
        for (a, (path, values)) in grid.iter().enumerate() {
            params.insert(path.clone(), values[idx[a]].clone());
            if built.is_ok() {
                built = set_path(&mut v, path, values[idx[a]].clone());
            }
        }
        let cfg = built.and_then(|_| serde_json::from_value::<ModelConfig>(v).map_err(Error::from));
        out.push((params, cfg));
    }
    Ok(out)
}

/// Exhaustive search by CV MAE. A configuration that fails counts as
/// infinitely bad; ties go to the lower RMSE, then to the earlier row.
pub fn grid_search(base: &ModelConfig, grid: &ParamGrid, x: &FeatureMatrix, y: &[f64], plan: &FoldPlan, seed: u64) -> Result<GridResult> {
    let combos = expand_grid(base, grid)?;
    let mut rows = Vec::with_capacity(combos.len());
    for (params, cfg) in combos {
        let row = match cfg {
            Err(e) => GridRow { params, config: None, summary: None, error: Some(e.to_string()) },
            Ok(cfg) => match cross_validate_config(&cfg, x, y, plan, seed) {
                Ok(s) => GridRow { params, config: Some(cfg), summary: Some(s), error: None },
                Err(e) => GridRow { params, config: Some(cfg), summary: None, error: Some(e.to_string()) },
            },
        };
        rows.push(row);
    }
    let mut best = 0;
    for (i, r) in rows.iter().enumerate().skip(1) {
        let (m, s) = r.key();
        let (bm, bs) = rows[best].key();
        if m < bm || (m == bm && s < bs) {
            best = i;
        }
    }
    Ok(GridResult { best, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::make_folds;
    use crate::models::TreeEnsembleConfig;
    use crate::train::TrainConfig;
    use ndarray::Array2;
    use serde_json::json;

    fn fixture() -> (FeatureMatrix, Vec<f64>) {
        let v = Array2::from_shape_fn((50, 2), |(i, j)| ((i * (3 + j)) % 17) as f64 / 8.0 - 1.0);
        let y = (0..50).map(|i| (v[[i, 0]]).sin() + 0.5 * v[[i, 1]]).collect();
        (FeatureMatrix::new(vec!["a".into(), "b".into()], v).unwrap(), y)
    }

    #[test]
    fn expansion_order_and_size() {
        let grid: ParamGrid = vec![
            ("n_trees".into(), vec![json!(1), json!(2), json!(3)]),
            ("max_depth".into(), vec![json!(1), json!(2)]),
        ];
        let combos = expand_grid(&ModelConfig::gbdt(), &grid).unwrap();
        assert_eq!(combos.len(), 6);
        assert_eq!(combos[1].0["max_depth"], json!(2));
        assert_eq!(combos[2].0["n_trees"], json!(2));
        assert!(expand_grid(&ModelConfig::gbdt(), &vec![("n_trees".into(), vec![])]).is_err());
    }

    #[test]
    fn singleton_grid() {
        let (x, y) = fixture();
        let plan = make_folds(50, 5, 1, 0).unwrap();
        let base = ModelConfig::Gbdt(TreeEnsembleConfig { n_trees: 5, ..TreeEnsembleConfig::gbdt() });
        let r = grid_search(&base, &vec![("n_trees".into(), vec![json!(5)])], &x, &y, &plan, 0).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.best_row().config.as_ref(), Some(&base));
    }

    #[test]
    fn absurd_learning_rate_loses() {
        let (x, y) = fixture();
        let plan = make_folds(50, 5, 1, 0).unwrap();
        let base = ModelConfig::Mlp {
            train: TrainConfig { epochs: 30, ..TrainConfig::default() },
        };
        let grid = vec![("train.learning_rate".into(), vec![json!(1000.0), json!(0.1)])];
        let r = grid_search(&base, &grid, &x, &y, &plan, 1).unwrap();
        assert_eq!(r.best, 1);
        assert_eq!(r.rows.len(), 2);
    }

    #[test]
    fn invalid_values_are_recorded_not_fatal() {
        let (x, y) = fixture();
        let plan = make_folds(50, 5, 1, 0).unwrap();
        let base = ModelConfig::Gbdt(TreeEnsembleConfig { n_trees: 3, ..TreeEnsembleConfig::gbdt() });
        let grid = vec![("n_trees".into(), vec![json!("many"), json!(3)])];
        let r = grid_search(&base, &grid, &x, &y, &plan, 0).unwrap();
        assert!(r.rows[0].error.is_some());
        assert_eq!(r.best, 1);
    }
}
