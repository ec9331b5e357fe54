use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use ndarray::Array2;
use paqreg::models::hybrid_param_count;
use paqreg::qsim::{finite_diff_params, generate_circuit, grad_adjoint, grad_param_shift};
use paqreg::rng::{derive_seed, seeded};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Global, NumericFailure};
use crate::common::{echo_config, load_config, resolve_seed, write_json};

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    sub_encoders: Option<usize>,
    #[arg(long)]
    params_per_qc: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamsConfig {
    pub n_qubits: usize,
    pub n_sub_encoders: usize,
    pub params_per_qc: usize,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            n_qubits: 8,
            n_sub_encoders: 4,
            params_per_qc: 40,
        }
    }
}

pub fn params(g: &Global, a: ParamsArgs) -> Result<()> {
    let mut cfg: ParamsConfig = load_config(g.config.as_deref())?;
    cfg.n_qubits = a.qubits.unwrap_or(cfg.n_qubits);
    cfg.n_sub_encoders = a.sub_encoders.unwrap_or(cfg.n_sub_encoders);
    cfg.params_per_qc = a.params_per_qc.unwrap_or(cfg.params_per_qc);
    echo_config("params", &cfg)?;
    println!("{}", hybrid_param_count(cfg.n_qubits, cfg.n_sub_encoders, cfg.params_per_qc));
    Ok(())
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    qubits: Option<usize>,
    /// Trainable rotation count.
    #[arg(long)]
    params: Option<usize>,
    /// Encoded feature count; defaults to the qubit count.
    #[arg(long)]
    features: Option<usize>,
    /// Finite-difference step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradcheckConfig {
    pub n_qubits: usize,
    pub n_params: usize,
    pub n_features: Option<usize>,
    pub step: f64,
    /// Allowed |shift - finite difference|.
    pub fd_tolerance: f64,
    /// Allowed |adjoint - shift|.
    pub adjoint_tolerance: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            n_params: 12,
            n_features: None,
            step: 1e-4,
            fd_tolerance: 1e-6,
            adjoint_tolerance: 1e-10,
            seed: 0,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckResult {
    pub shift_vs_fd: f64,
    pub adjoint_vs_shift: f64,
    pub adjoint_vs_fd: f64,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Serialize)]
struct GradcheckOutput<'a> {
    config: &'a GradcheckConfig,
    result: &'a GradcheckResult,
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn gradcheck(g: &Global, a: GradcheckArgs) -> Result<()> {
    let mut cfg: GradcheckConfig = load_config(g.config.as_deref())?;
    cfg.n_qubits = a.qubits.unwrap_or(cfg.n_qubits);
    cfg.n_params = a.params.unwrap_or(cfg.n_params);
    cfg.n_features = a.features.or(cfg.n_features);
    cfg.step = a.step.unwrap_or(cfg.step);
    cfg.out = a.out.or(cfg.out);
    cfg.seed = resolve_seed(cfg.seed, g.seed)?;
    echo_config("gradcheck", &cfg)?;

    let n_features = cfg.n_features.unwrap_or(cfg.n_qubits);
    let spec = generate_circuit(cfg.n_qubits, n_features, cfg.n_params, derive_seed(cfg.seed, 0))?;
    let mut rng = seeded(derive_seed(cfg.seed, 1));
    let features: Vec<f64> = (0..n_features).map(|_| rng.gen_range(-PI..PI)).collect();
    let params: Vec<f64> = (0..cfg.n_params).map(|_| rng.gen_range(-PI..PI)).collect();

    let shift = grad_param_shift(&spec, &features, &params)?;
    let adjoint = grad_adjoint(&spec, &features, &params)?;
    let fd = finite_diff_params(&spec, &features, &params, cfg.step)?;
    let shift_vs_fd = max_abs_diff(&shift, &fd);
    let adjoint_vs_shift = max_abs_diff(&adjoint, &shift);
    let adjoint_vs_fd = max_abs_diff(&adjoint, &fd);
    let result = GradcheckResult {
        shift_vs_fd,
        adjoint_vs_shift,
        adjoint_vs_fd,
        max_deviation: shift_vs_fd.max(adjoint_vs_shift).max(adjoint_vs_fd),
        passed: shift_vs_fd < cfg.fd_tolerance && adjoint_vs_shift < cfg.adjoint_tolerance,
    };
    if let Some(p) = &cfg.out {
        write_json(
            p,
            &GradcheckOutput {
                config: &cfg,
                result: &result,
            },
        )?;
    }
    println!("{:<20}{:>12.3e}", "shift vs fd", result.shift_vs_fd);
    println!("{:<20}{:>12.3e}", "adjoint vs shift", result.adjoint_vs_shift);
    println!("{:<20}{:>12.3e}", "adjoint vs fd", result.adjoint_vs_fd);
    println!("{:<20}{:>12.3e}", "max deviation", result.max_deviation);
    if !result.passed {
        return Err(NumericFailure(format!(
            "gradient check failed: shift vs fd {:.3e} (tol {:.0e}), adjoint vs shift {:.3e} (tol {:.0e})",
            shift_vs_fd, cfg.fd_tolerance, adjoint_vs_shift, cfg.adjoint_tolerance
        ))
        .into());
    }
    Ok(())
}
