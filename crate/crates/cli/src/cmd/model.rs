use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use paqreg::ingest::{filter_features, make_folds, read_dataset, Dataset, FilterConfig, Removal};
use paqreg::models::{
    select_features, Checkpoint, HybridConfig, ModelConfig, SelectConfig, SelectionReport,
};
use paqreg::train::{
    compute_metrics, cross_validate_config, grid_search, CvSummary, GridResult, Metrics, ParamGrid,
    TrainConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Global;
use crate::common::{
    echo_config, load_config, parse_csv_list, read_json, require, resolve_seed, write_json,
    FeatureChoice,
};

fn load_dataset(path: &Path) -> Result<Dataset> {
    let data = read_dataset(path).with_context(|| format!("reading {}", path.display()))?;
    if data.is_empty() {
        return Err(paqreg::Error::InvalidInput(format!("{} contains no records", path.display())).into());
    }
    Ok(data)
}

fn all_rows(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Gbdt,
    RandomForest,
    Mlp,
    Hybrid,
    Voting,
}

impl ModelKind {
    fn default_config(self) -> ModelConfig {
        match self {
            ModelKind::Gbdt => ModelConfig::gbdt(),
            ModelKind::RandomForest => ModelConfig::random_forest(),
            ModelKind::Mlp => ModelConfig::Mlp {
                train: TrainConfig::default(),
            },
            ModelKind::Hybrid => ModelConfig::Hybrid {
                hybrid: HybridConfig::default(),
                train: TrainConfig::default(),
            },
            ModelKind::Voting => ModelConfig::default_voting(),
        }
    }
}

fn default_model() -> ModelConfig {
    ModelConfig::gbdt()
}

/// Flags shared by `train` and `cv` for choosing columns and model.
#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Replace the configured model with the defaults of this kind.
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Comma-separated feature columns.
    #[arg(long, conflicts_with = "selection")]
    columns: Option<String>,
    /// Output of `select`; its retained columns are used unless --top is set.
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Use the first N columns of the selection ranking.
    #[arg(long, requires = "selection")]
    top: Option<usize>,
}

impl ModelArgs {
    fn apply(self, input: &mut Option<PathBuf>, features: &mut FeatureChoice, model: &mut ModelConfig) {
        if let Some(p) = self.input {
            *input = Some(p);
        }
        if let Some(k) = self.model {
            *model = k.default_config();
        }
        if let Some(c) = self.columns {
            *features = FeatureChoice {
                columns: Some(parse_csv_list(&c)),
                ..FeatureChoice::default()
            };
        }
        if let Some(s) = self.selection {
            *features = FeatureChoice {
                columns: None,
                selection: Some(s.to_string_lossy().into_owned()),
                top: self.top,
            };
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Allowed relative MAE increase while eliminating columns.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Absolute Pearson correlation above which a later column is dropped.
    #[arg(long)]
    corr_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectCmdConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub filter: FilterConfig,
    pub select: SelectConfig,
}

#[derive(Serialize)]
struct SelectOutput<'a> {
    config: &'a SelectCmdConfig,
    removed: &'a [Removal],
    #[serde(flatten)]
    selection: &'a SelectionReport,
}

pub fn select(g: &Global, a: SelectArgs) -> Result<()> {
    let mut cfg: SelectCmdConfig = load_config(g.config.as_deref())?;
    cfg.input = a.input.or(cfg.input);
    cfg.out = a.out.or(cfg.out);
    if let Some(t) = a.tolerance {
        cfg.select.tolerance = t;
    }
    if let Some(t) = a.corr_threshold {
        cfg.filter.corr_threshold = t;
    }
    cfg.select.seed = resolve_seed(cfg.select.seed, g.seed)?;
    echo_config("select", &cfg)?;

    let data = load_dataset(require(&cfg.input, "input")?)?;
    let y = data.targets();
    let (kept, removed) = filter_features(&data.features, &cfg.filter)?;
    let stats = kept.fit_normalizer(&all_rows(kept.n_rows()))?;
    let z = kept.apply_normalizer(&stats)?;
    let report = select_features(&z, &y, &cfg.select)?;
    if let Some(p) = &cfg.out {
        write_json(
            p,
            &SelectOutput {
                config: &cfg,
                removed: &removed,
                selection: &report,
            },
        )?;
    }
    println!(
        "filtered {} of {} columns; retained {} after elimination (best MAE {:.4})",
        removed.len(),
        data.features.n_cols(),
        report.retained.len(),
        report.best_mae
    );
    println!("{:>10}  {:>10}  {:>10}  dropped", "n_features", "mae", "mae_std");
    for s in &report.trace {
        println!(
            "{:>10}  {:>10.4}  {:>10.4}  {}",
            s.n_features,
            s.mae,
            s.mae_std,
            s.dropped.as_deref().unwrap_or("-")
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Checkpoint to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCmdConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub features: FeatureChoice,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    pub seed: u64,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: None,
            features: FeatureChoice::default(),
            model: default_model(),
            seed: 0,
        }
    }
}

fn print_metrics(label: &str, m: &Metrics) {
    println!("{label:<8}  r2 {:>8.4}  mae {:>8.4}  rmse {:>8.4}", m.r2, m.mae, m.rmse);
}

pub fn train(g: &Global, a: TrainArgs) -> Result<()> {
    let mut cfg: TrainCmdConfig = load_config(g.config.as_deref())?;
    a.model.apply(&mut cfg.input, &mut cfg.features, &mut cfg.model);
    cfg.out = a.out.or(cfg.out);
    cfg.seed = resolve_seed(cfg.seed, g.seed)?;
    echo_config("train", &cfg)?;

    let out = require(&cfg.out, "out")?;
    let data = load_dataset(require(&cfg.input, "input")?)?;
    let y = data.targets();
    let x = cfg.features.resolve(&data)?;
    let stats = x.fit_normalizer(&all_rows(x.n_rows()))?;
    let z = x.apply_normalizer(&stats)?;
    let fitted = cfg.model.fit(z.values(), &y, cfg.seed)?;
    let ck = Checkpoint::new(cfg.model.clone(), fitted, x.column_names().to_vec(), Some(stats));
    let pred = ck.predict_raw(x.values())?;

    // The checkpoint reader ignores unknown keys, so the config rides along.
    let mut doc = serde_json::to_value(&ck)?;
    doc.as_object_mut()
        .expect("checkpoint serializes to an object")
        .insert("config".into(), serde_json::to_value(&cfg)?);
    write_json(out, &doc)?;

    println!("{} on {} rows x {} features", cfg.model.kind(), x.n_rows(), x.n_cols());
    match compute_metrics(&y, &pred) {
        Ok(m) => print_metrics("train", &m),
        Err(e) => eprintln!("warning: training metrics unavailable: {e}"),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV table of mean/std metrics.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// JSON grid: `[["train.learning_rate", [0.01, 0.001]], ...]` or an
    /// object of the same shape.
    #[arg(long)]
    grid: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvCmdConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub features: FeatureChoice,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    pub n_folds: usize,
    pub n_iterations: usize,
    pub seed: u64,
    pub grid: Option<ParamGrid>,
}

impl Default for CvCmdConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: None,
            table: None,
            features: FeatureChoice::default(),
            model: default_model(),
            n_folds: 5,
            n_iterations: 20,
            seed: 0,
            grid: None,
        }
    }
}

#[derive(Serialize)]
struct CvOutput<'a> {
    config: &'a CvCmdConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a CvSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<&'a GridResult>,
}

fn read_grid(path: &Path) -> Result<ParamGrid> {
    let v: Value = read_json(path)?;
    match v {
        Value::Object(map) => Ok(map
            .into_iter()
            .map(|(k, v)| match v {
                Value::Array(vals) => Ok((k, vals)),
                other => Ok((k, vec![other])),
            })
            .collect::<Result<Vec<_>>>()?),
        other => serde_json::from_value(other)
            .with_context(|| format!("{}: expected a list of [path, values] pairs", path.display())),
    }
}

const TABLE_HEADER: [&str; 7] = ["model", "r2_mean", "r2_std", "mae_mean", "mae_std", "rmse_mean", "rmse_std"];

fn table_row(label: String, s: &CvSummary) -> Vec<String> {
    vec![
        label,
        s.r2.mean.to_string(),
        s.r2.std.to_string(),
        s.mae.mean.to_string(),
        s.mae.std.to_string(),
        s.rmse.mean.to_string(),
        s.rmse.std.to_string(),
    ]
}

pub fn cv(g: &Global, a: CvArgs) -> Result<()> {
    let mut cfg: CvCmdConfig = load_config(g.config.as_deref())?;
    a.model.apply(&mut cfg.input, &mut cfg.features, &mut cfg.model);
    cfg.out = a.out.or(cfg.out);
    cfg.table = a.table.or(cfg.table);
    cfg.n_folds = a.folds.unwrap_or(cfg.n_folds);
    cfg.n_iterations = a.iterations.unwrap_or(cfg.n_iterations);
    if let Some(p) = &a.grid {
        cfg.grid = Some(read_grid(p)?);
    }
    cfg.seed = resolve_seed(cfg.seed, g.seed)?;
    echo_config("cv", &cfg)?;

    let data = load_dataset(require(&cfg.input, "input")?)?;
    let y = data.targets();
    let x = cfg.features.resolve(&data)?;
    let plan = make_folds(x.n_rows(), cfg.n_folds, cfg.n_iterations, cfg.seed)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let (summary, grid) = match &cfg.grid {
        None => {
            let s = cross_validate_config(&cfg.model, &x, &y, &plan, cfg.seed)?;
            rows.push(table_row(cfg.model.kind().to_string(), &s));
            (Some(s), None)
        }
        Some(grid) => {
            let r = grid_search(&cfg.model, grid, &x, &y, &plan, cfg.seed)?;
            for row in &r.rows {
                if let Some(s) = &row.summary {
                    let label = format!("{} {}", cfg.model.kind(), serde_json::to_string(&row.params)?);
                    rows.push(table_row(label, s));
                }
            }
            (None, Some(r))
        }
    };
    let doc = CvOutput {
        config: &cfg,
        summary: summary.as_ref(),
        grid: grid.as_ref(),
    };
    if let Some(p) = &cfg.out {
        write_json(p, &doc)?;
    }
    if let Some(p) = &cfg.table {
        let mut w = csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(TABLE_HEADER)?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }

    println!(
        "{} folds x {} iterations on {} rows x {} features",
        cfg.n_folds,
        cfg.n_iterations,
        x.n_rows(),
        x.n_cols()
    );
    for r in &rows {
        println!(
            "{:<12} r2 {:>8.4} ± {:.4}  mae {:>8.4} ± {:.4}  rmse {:>8.4} ± {:.4}",
            r[0],
            r[1].parse::<f64>().unwrap_or(f64::NAN),
            r[2].parse::<f64>().unwrap_or(f64::NAN),
            r[3].parse::<f64>().unwrap_or(f64::NAN),
            r[4].parse::<f64>().unwrap_or(f64::NAN),
            r[5].parse::<f64>().unwrap_or(f64::NAN),
            r[6].parse::<f64>().unwrap_or(f64::NAN),
        );
    }
    if let Some(r) = &grid {
        println!("best: {}", serde_json::to_string(&r.best_row().params)?);
        for row in r.rows.iter().filter(|row| row.error.is_some()) {
            eprintln!(
                "warning: grid point {} failed: {}",
                serde_json::to_string(&row.params)?,
                row.error.as_deref().unwrap_or_default()
            );
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// CSV of `id,prediction`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON with the config and, when targets are present, metrics.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictCmdConfig {
    pub input: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct PredictOutput<'a> {
    config: &'a PredictCmdConfig,
    n_rows: usize,
    metrics: Option<Metrics>,
}

pub fn predict(g: &Global, a: PredictArgs) -> Result<()> {
    let mut cfg: PredictCmdConfig = load_config(g.config.as_deref())?;
    cfg.input = a.input.or(cfg.input);
    cfg.checkpoint = a.checkpoint.or(cfg.checkpoint);
    cfg.out = a.out.or(cfg.out);
    cfg.report = a.report.or(cfg.report);
    echo_config("predict", &cfg)?;

    let ck_path = require(&cfg.checkpoint, "checkpoint")?;
    let text = std::fs::read_to_string(ck_path).with_context(|| format!("reading {}", ck_path.display()))?;
    let ck = Checkpoint::from_json(&text).with_context(|| format!("loading checkpoint {}", ck_path.display()))?;
    let data = load_dataset(require(&cfg.input, "input")?)?;
    let x = data.features.select_named(&ck.feature_names)?;
    let pred = ck.predict_raw(x.values())?;

    match &cfg.out {
        Some(p) => {
            let mut w = csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
            w.write_record(["id", "prediction"])?;
            for (r, v) in data.records.iter().zip(&pred) {
                w.write_record([r.id.as_str(), v.to_string().as_str()])?;
            }
            w.flush()?;
        }
        None => {
            println!("id,prediction");
            for (r, v) in data.records.iter().zip(&pred) {
                println!("{},{v}", r.id);
            }
        }
    }

    let y = data.targets();
    let metrics = if y.iter().all(|v| v.is_finite()) {
        compute_metrics(&y, &pred).ok()
    } else {
        None
    };
    if let Some(m) = &metrics {
        if cfg.out.is_some() {
            print_metrics("predict", m);
        }
    }
    if let Some(p) = &cfg.report {
        write_json(
            p,
            &PredictOutput {
                config: &cfg,
                n_rows: pred.len(),
                metrics,
            },
        )?;
    }
    Ok(())
}
