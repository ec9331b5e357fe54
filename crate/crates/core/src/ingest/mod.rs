//! Loading, curation, feature conditioning and fold planning.

mod curate;
mod features;
mod folds;
mod io;
mod smiles;

pub use curate::{curate, CurateConfig, Curated, CurationReport, MergedGroup};
pub use features::{
    filter_features, pearson, ColumnStats, FeatureMatrix, FilterConfig, NormStats, Removal,
    RemovalReason,
};
pub use folds::{make_folds, FoldPlan};
pub use io::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, Dataset};
pub use smiles::scan_elements;

use serde::{Deserialize, Serialize};

/// One compound: identifier, structure string and proton affinity
/// (kcal/mol). `group_key` identifies stereoisomers of the same constitution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeRecord {
    pub id: String,
    pub smiles: String,
    pub group_key: String,
    pub pa: f64,
}

/// Proton affinity window kept after curation, kcal/mol.
pub const PA_RANGE: (f64, f64) = (150.0, 260.0);
