use std::fmt;
use std::path::PathBuf;

pub mod circuit;
pub mod data;
pub mod model;

/// Options shared by every subcommand.
pub struct Global {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// A check the command itself performs failed (e.g. gradient mismatch).
#[derive(Debug)]
pub struct NumericFailure(pub String);

impl fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericFailure {}
