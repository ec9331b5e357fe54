//! Seeded synthetic proton-affinity dataset.
//!
//! Stand-in for a curated descriptor table: a block of informative columns
//! drives the target through a linear part with decaying weights plus a few
//! smooth nonlinear terms; the rest are near-duplicates of informative
//! columns, constants, columns with gaps, and pure noise. A handful of rows
//! carry disallowed elements and a few stereoisomer pairs share a group key,
//! so every curation rule has something to do.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chem::{Fingerprint, FingerprintSet};
use crate::error::{Error, Result};
use crate::ingest::{Dataset, FeatureMatrix, MoleculeRecord};
use crate::rng::{derive_seed, seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub n_redundant: usize,
    pub n_constant: usize,
    pub n_missing: usize,
    /// Noise standard deviation relative to the signal's.
    pub noise: f64,
    pub n_disallowed: usize,
    pub n_stereo_pairs: usize,
    pub fingerprint_width: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 1000,
            n_features: 186,
            n_informative: 64,
            n_redundant: 20,
            n_constant: 4,
            n_missing: 3,
            noise: 0.15,
            n_disallowed: 8,
            n_stereo_pairs: 8,
            fingerprint_width: 166,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub fingerprints: FingerprintSet,
    /// Names of the columns the target depends on, most influential first.
    pub informative: Vec<String>,
}

const PA_CENTER: f64 = 205.0;
const PA_SCALE: f64 = 12.0;

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn generate(cfg: &SynthConfig) -> Result<Synthetic> {
    let fixed = cfg.n_informative + cfg.n_redundant + cfg.n_constant + cfg.n_missing;
    if cfg.n_informative < 4 || fixed > cfg.n_features {
        return Err(Error::invalid(format!(
            "need at least 4 informative columns and at most n_features ({}) special columns, got {fixed}",
            cfg.n_features
        )));
    }
    if cfg.n_stereo_pairs + cfg.n_disallowed >= cfg.n_rows {
        return Err(Error::invalid("too few rows for the requested stereo pairs and disallowed rows"));
    }
    let n = cfg.n_rows;
    let k = cfg.n_informative;
    let mut rng = seeded(derive_seed(cfg.seed, 0));

    // Informative block: a mix of gaussian, uniform and skewed marginals.
    let informative = Array2::from_shape_fn((n, k), |(_, j)| match j % 3 {
        0 => normal(&mut rng),
        1 => rng.gen_range(-1.7..1.7),
        _ => (0.5 * normal(&mut rng)).exp() - 1.0,
    });
    let weights: Vec<f64> = (0..k)
        .map(|j| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            sign * (-(j as f64) / 8.0).exp()
        })
        .collect();
    let mut signal: Vec<f64> = (0..n)
        .map(|i| {
            let z = informative.row(i);
            let lin: f64 = (0..k).map(|j| weights[j] * z[j]).sum();
            lin + 0.6 * (1.3 * z[0]).sin() + 0.4 * z[1] * z[2] + 0.3 * (z[3] * 1.5).tanh() + 0.2 * z[4] * z[4]
        })
        .collect();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let sd = (signal.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    for s in &mut signal {
        *s = (*s - mean) / sd;
    }
    let pa: Vec<f64> = signal
        .iter()
        .map(|s| PA_CENTER + PA_SCALE * (s + cfg.noise * normal(&mut rng)))
        .collect();

    // Remaining columns.
    let mut columns: Vec<(Vec<f64>, Option<usize>)> = Vec::with_capacity(cfg.n_features);
    for j in 0..k {
        columns.push((informative.column(j).to_vec(), Some(j)));
    }
    for r in 0..cfg.n_redundant {
        let src = r % k;
        let (a, b) = (rng.gen_range(0.5..3.0), rng.gen_range(-5.0..5.0));
        let col = (0..n).map(|i| a * informative[[i, src]] + b + 0.05 * normal(&mut rng)).collect();
        columns.push((col, None));
    }
    for _ in 0..cfg.n_constant {
        let c: f64 = rng.gen_range(-3.0..3.0);
        columns.push((vec![c; n], None));
    }
    for _ in 0..cfg.n_missing {
        let col = (0..n)
            .map(|_| if rng.gen_bool(0.05) { f64::NAN } else { normal(&mut rng) })
            .collect();
        columns.push((col, None));
    }
    while columns.len() < cfg.n_features {
        columns.push(((0..n).map(|_| normal(&mut rng)).collect(), None));
    }
    columns.shuffle(&mut rng);
    let names: Vec<String> = (0..cfg.n_features).map(|c| format!("d{c:03}")).collect();
    let mut rank: Vec<(usize, String)> = columns
        .iter()
        .zip(&names)
        .filter_map(|((_, src), name)| src.map(|j| (j, name.clone())))
        .collect();
    rank.sort();
    let values = Array2::from_shape_fn((n, cfg.n_features), |(i, c)| columns[c].0[i]);

    // Records: plain organics, a few with disallowed elements, and stereo
    // pairs that duplicate a row with a slightly different PA.
    let mut srng = seeded(derive_seed(cfg.seed, 1));
    let mut records: Vec<MoleculeRecord> = (0..n)
        .map(|i| MoleculeRecord {
            id: format!("m{i:04}"),
            smiles: organic_smiles(&mut srng),
            group_key: format!("g{i:04}"),
            pa: pa[i],
        })
        .collect();
    let mut picks: Vec<usize> = (0..n).collect();
    picks.shuffle(&mut srng);
    for (t, &i) in picks.iter().take(cfg.n_disallowed).enumerate() {
        let extra = ["[Fe]", "Cl", "Br", "[Si](C)(C)C"][t % 4];
        records[i].smiles = format!("{}{extra}", records[i].smiles);
    }
    let mut values = values;
    for (p, &i) in picks.iter().skip(cfg.n_disallowed).take(cfg.n_stereo_pairs).enumerate() {
        // Row i becomes the stereo partner of row j.
        let j = picks[cfg.n_disallowed + cfg.n_stereo_pairs + p];
        records[i].group_key = records[j].group_key.clone();
        records[i].smiles = format!("{}@", records[j].smiles);
        records[i].pa = records[j].pa + srng.gen_range(-0.4..0.4);
        let src = values.row(j).to_owned();
        for (c, v) in src.iter().enumerate() {
            values[[i, c]] = if v.is_nan() { *v } else { v + 1e-3 * normal(&mut srng) };
        }
    }
    let features = FeatureMatrix::new(names, values)?;

    let fingerprints = synth_fingerprints(cfg, &records, &mut seeded(derive_seed(cfg.seed, 2)))?;
    Ok(Synthetic {
        dataset: Dataset { records, features },
        fingerprints,
        informative: rank.into_iter().map(|(_, n)| n).collect(),
    })
}

fn organic_smiles(rng: &mut Rng) -> String {
    const ATOMS: [&str; 6] = ["C", "C", "C", "N", "O", "c1ccccc1"];
    let len = rng.gen_range(2..7);
    let mut s = String::new();
    for t in 0..len {
        let a = ATOMS[rng.gen_range(0..ATOMS.len())];
        if t > 0 && rng.gen_bool(0.25) {
            s.push_str(&format!("({a})"));
        } else {
            s.push_str(a);
        }
    }
    if rng.gen_bool(0.2) {
        s.push_str("P(=O)(O)O");
    }
    s
}

/// Scaffold families: each molecule copies one of a few prototypes and
/// flips a small number of bits, so clustering has structure to find.
fn synth_fingerprints(cfg: &SynthConfig, records: &[MoleculeRecord], rng: &mut Rng) -> Result<FingerprintSet> {
    let w = cfg.fingerprint_width;
    let n_protos = 12;
    let protos: Vec<Vec<bool>> = (0..n_protos)
        .map(|_| (0..w).map(|_| rng.gen_bool(0.25)).collect())
        .collect();
    let mut fps = Vec::with_capacity(records.len());
    for _ in records {
        let mut bits = protos[rng.gen_range(0..n_protos)].clone();
        let flips = rng.gen_range(0..=w / 12);
        for _ in 0..flips {
            let b = rng.gen_range(0..w);
            bits[b] = !bits[b];
        }
        fps.push(Fingerprint::from_bits(w, bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))?);
    }
    Ok(FingerprintSet {
        width: w,
        ids: records.iter().map(|r| r.id.clone()).collect(),
        fingerprints: fps,
    })
}
