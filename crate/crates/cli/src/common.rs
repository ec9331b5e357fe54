use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use paqreg::ingest::{Dataset, FeatureMatrix};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub const SEED_ENV: &str = "PAQREG_SEED";

/// Reads a command config. The file may hold the config itself or a
/// previous output document with the config under `"config"`.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut v: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    if let Some(inner) = v.get_mut("config") {
        v = inner.take();
    }
    serde_json::from_value(v).with_context(|| format!("config {} has an unexpected shape", path.display()))
}

/// `PAQREG_SEED`, when set, replaces the seed from the config file; an
/// explicit `--seed` flag still wins.
pub fn resolve_seed(config_seed: u64, flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| paqreg::Error::InvalidInput(format!("{SEED_ENV}={v} is not an unsigned integer")).into()),
        Err(_) => Ok(config_seed),
    }
}

/// Prints the effective config to stderr as one JSON line.
pub fn echo_config<T: Serialize>(command: &str, cfg: &T) -> Result<()> {
    eprintln!("{command} config: {}", serde_json::to_string(cfg)?);
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Column choice for modelling commands: an explicit list, or the output
/// of `select` (its retained set, or the first `top` ranked columns).
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FeatureChoice {
    pub columns: Option<Vec<String>>,
    pub selection: Option<String>,
    pub top: Option<usize>,
}

#[derive(serde::Deserialize)]
struct SelectionDoc {
    ranking: Vec<Ranked>,
    retained: Vec<String>,
}

#[derive(serde::Deserialize)]
struct Ranked {
    name: String,
}

impl FeatureChoice {
    pub fn resolve(&self, data: &Dataset) -> Result<FeatureMatrix> {
        let names: Vec<String> = if let Some(cols) = &self.columns {
            cols.clone()
        } else if let Some(sel) = &self.selection {
            let doc: SelectionDoc = read_json(Path::new(sel))?;
            match self.top {
                Some(k) => {
                    if k > doc.ranking.len() {
                        bail!(paqreg::Error::InvalidInput(format!(
                            "--top {k} exceeds the {} ranked columns in {sel}",
                            doc.ranking.len()
                        )));
                    }
                    doc.ranking.into_iter().take(k).map(|r| r.name).collect()
                }
                None => doc.retained,
            }
        } else {
            data.features.column_names().to_vec()
        };
        let m = data.features.select_named(&names)?;
        for (c, name) in m.column_names().iter().enumerate() {
            if m.values().column(c).iter().any(|v| !v.is_finite()) {
                bail!(paqreg::Error::InvalidInput(format!(
                    "column `{name}` has missing or non-finite values; drop it (see `select`) before modelling"
                )));
            }
        }
        Ok(m)
    }
}

pub fn parse_csv_list(s: &str) -> Vec<String> {
    s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}

pub fn require<'a>(path: &'a Option<std::path::PathBuf>, name: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| {
        paqreg::Error::InvalidInput(format!("missing `{name}`: pass --{} or set it in the config", name.replace('_', "-"))).into()
    })
}
