use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use paqreg::chem::{butina_cluster, mean_pairwise_similarity, read_fingerprints, write_fingerprints_to};
use paqreg::ingest::{read_dataset, write_dataset, CurateConfig, CurationReport};
use paqreg::synth::{generate, SynthConfig};
use serde::{Deserialize, Serialize};

use super::Global;
use crate::common::{echo_config, load_config, require, resolve_seed, write_json};

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Dataset CSV to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fingerprint file to write alongside the dataset.
    #[arg(long)]
    fingerprints: Option<PathBuf>,
    /// JSON listing the informative columns, most influential first.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataConfig {
    pub out: Option<PathBuf>,
    pub fingerprints: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub synth: SynthConfig,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a GenDataConfig,
    informative: &'a [String],
}

pub fn gen_data(g: &Global, a: GenDataArgs) -> Result<()> {
    let mut cfg: GenDataConfig = load_config(g.config.as_deref())?;
    cfg.out = a.out.or(cfg.out);
    cfg.fingerprints = a.fingerprints.or(cfg.fingerprints);
    cfg.manifest = a.manifest.or(cfg.manifest);
    if let Some(n) = a.rows {
        cfg.synth.n_rows = n;
    }
    if let Some(n) = a.noise {
        cfg.synth.noise = n;
    }
    cfg.synth.seed = resolve_seed(cfg.synth.seed, g.seed)?;
    echo_config("gen-data", &cfg)?;

    let out = require(&cfg.out, "out")?;
    let syn = generate(&cfg.synth)?;
    write_dataset(out, &syn.dataset).with_context(|| format!("writing {}", out.display()))?;
    if let Some(p) = &cfg.fingerprints {
        let w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
        write_fingerprints_to(w, &syn.fingerprints)?;
    }
    if let Some(p) = &cfg.manifest {
        write_json(
            p,
            &Manifest {
                config: &cfg,
                informative: &syn.informative,
            },
        )?;
    }
    println!(
        "wrote {} rows x {} features to {}",
        syn.dataset.len(),
        syn.dataset.features.n_cols(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// PA spread (kcal/mol) below which stereoisomers are merged.
    #[arg(long)]
    stereo_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurateCmdConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub curate: CurateConfig,
}

#[derive(Serialize)]
struct CurateOutput<'a> {
    config: &'a CurateCmdConfig,
    report: &'a CurationReport,
}

pub fn curate(g: &Global, a: CurateArgs) -> Result<()> {
    let mut cfg: CurateCmdConfig = load_config(g.config.as_deref())?;
    cfg.input = a.input.or(cfg.input);
    cfg.out = a.out.or(cfg.out);
    cfg.report = a.report.or(cfg.report);
    if let Some(t) = a.stereo_tolerance {
        cfg.curate.stereo_tolerance = t;
    }
    echo_config("curate", &cfg)?;

    let input = require(&cfg.input, "input")?;
    let out = require(&cfg.out, "out")?;
    let data = read_dataset(input).with_context(|| format!("reading {}", input.display()))?;
    if data.is_empty() {
        eprintln!("warning: {} contains no records", input.display());
    }
    let (curated, report) = data.curate(&cfg.curate)?;
    write_dataset(out, &curated).with_context(|| format!("writing {}", out.display()))?;
    if let Some(p) = &cfg.report {
        write_json(
            p,
            &CurateOutput {
                config: &cfg,
                report: &report,
            },
        )?;
    }
    let c = &report.counts;
    println!("{:<24}{:>8}", "input records", c.input);
    println!("{:<24}{:>8}", "non-finite PA", c.removed_nonfinite_pa);
    println!("{:<24}{:>8}", "unparseable", c.removed_unparseable);
    println!("{:<24}{:>8}", "disallowed elements", c.removed_elements);
    println!("{:<24}{:>8}", "PA out of range", c.removed_out_of_range);
    println!("{:<24}{:>8}", "merged groups", c.merged_groups);
    println!("{:<24}{:>8}", "divergent groups", c.divergent_groups);
    println!("{:<24}{:>8}", "output records", c.output);
    Ok(())
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Fingerprint file (`# width=N` then `id,fp_hex`).
    #[arg(long)]
    fingerprints: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterCmdConfig {
    pub fingerprints: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threshold: f64,
}

impl Default for ClusterCmdConfig {
    fn default() -> Self {
        Self {
            fingerprints: None,
            out: None,
            threshold: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReportSummary {
    pub n_items: usize,
    pub n_clusters: usize,
    pub n_singletons: usize,
    pub largest: usize,
    /// Over all unordered pairs; absent with fewer than two items.
    pub similarity_mean: Option<f64>,
    pub similarity_std: Option<f64>,
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    config: &'a ClusterCmdConfig,
    summary: ClusterReportSummary,
    /// Member ids per cluster, centroid first.
    clusters: Vec<Vec<&'a str>>,
}

pub fn cluster(g: &Global, a: ClusterArgs) -> Result<()> {
    let mut cfg: ClusterCmdConfig = load_config(g.config.as_deref())?;
    cfg.fingerprints = a.fingerprints.or(cfg.fingerprints);
    cfg.out = a.out.or(cfg.out);
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    echo_config("cluster", &cfg)?;

    let path = require(&cfg.fingerprints, "fingerprints")?;
    let set = read_fingerprints(path).with_context(|| format!("reading {}", path.display()))?;
    let result = butina_cluster(&set.fingerprints, cfg.threshold)?;
    let sim = if set.fingerprints.len() >= 2 {
        Some(mean_pairwise_similarity(&set.fingerprints)?)
    } else {
        None
    };
    let s = result.summary();
    let summary = ClusterReportSummary {
        n_items: s.n_items,
        n_clusters: s.n_clusters,
        n_singletons: s.n_singletons,
        largest: s.largest,
        similarity_mean: sim.map(|x| x.mean),
        similarity_std: sim.map(|x| x.std),
    };
    let clusters = result
        .clusters
        .iter()
        .map(|c| c.iter().map(|&i| set.ids[i].as_str()).collect())
        .collect();
    let doc = ClusterOutput {
        config: &cfg,
        summary: summary.clone(),
        clusters,
    };
    if let Some(p) = &cfg.out {
        write_json(p, &doc)?;
    }
    println!("{:<20}{:>10}", "items", summary.n_items);
    println!("{:<20}{:>10}", "clusters (>1)", summary.n_clusters);
    println!("{:<20}{:>10}", "singletons", summary.n_singletons);
    println!("{:<20}{:>10}", "largest", summary.largest);
    if let (Some(m), Some(sd)) = (summary.similarity_mean, summary.similarity_std) {
        println!("{:<20}{:>10.4}", "similarity mean", m);
        println!("{:<20}{:>10.4}", "similarity std", sd);
    }
    Ok(())
}
