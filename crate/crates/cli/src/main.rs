use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use paqreg::error::ErrorClass;

mod cmd;
mod common;

#[derive(Debug, Parser)]
#[command(name = "paqreg", version, about = "Proton affinity regression with tree ensembles and hybrid quantum networks")]
struct Cli {
    /// JSON config for the subcommand. A previous output document is also
    /// accepted; its `config` entry is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override (beats PAQREG_SEED and the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset and matching fingerprints.
    GenData(cmd::data::GenDataArgs),
    /// Filter and merge records; writes the curated CSV and a report.
    Curate(cmd::data::CurateArgs),
    /// Butina clustering of a fingerprint file.
    Cluster(cmd::data::ClusterArgs),
    /// Filter, normalize and rank features; backward elimination.
    Select(cmd::model::SelectArgs),
    /// Fit a model on all rows and write a checkpoint.
    Train(cmd::model::TrainArgs),
    /// Repeated k-fold cross-validation, optionally over a grid.
    Cv(cmd::model::CvArgs),
    /// Predict with a checkpoint.
    Predict(cmd::model::PredictArgs),
    /// Trainable parameter count of a hybrid model.
    Params(cmd::circuit::ParamsArgs),
    /// Compare adjoint, parameter-shift and finite-difference gradients.
    Gradcheck(cmd::circuit::GradcheckArgs),
}

fn init_threads(n: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    if n.is_some_and(|n| n > 1) {
        eprintln!("warning: built without the `parallel` feature; --threads is ignored");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    let g = cmd::Global {
        config: cli.config,
        seed: cli.seed,
    };
    match cli.command {
        Command::GenData(a) => cmd::data::gen_data(&g, a),
        Command::Curate(a) => cmd::data::curate(&g, a),
        Command::Cluster(a) => cmd::data::cluster(&g, a),
        Command::Select(a) => cmd::model::select(&g, a),
        Command::Train(a) => cmd::model::train(&g, a),
        Command::Cv(a) => cmd::model::cv(&g, a),
        Command::Predict(a) => cmd::model::predict(&g, a),
        Command::Params(a) => cmd::circuit::params(&g, a),
        Command::Gradcheck(a) => cmd::circuit::gradcheck(&g, a),
    }
}

/// 3 for numeric failures, 2 for everything else (bad input, I/O, parse).
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<paqreg::Error>() {
            return match e.class() {
                ErrorClass::Numeric => 3,
                ErrorClass::Input => 2,
            };
        }
        if cause.is::<cmd::NumericFailure>() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
