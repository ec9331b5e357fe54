//! Fingerprint similarity, Butina clustering and orbital-derived descriptors.

mod cluster;
mod descriptors;
mod fingerprint;

pub use cluster::{butina_cluster, ClusterResult, ClusterSummary};
pub use descriptors::{derive_qc, DerivedDescriptors};
pub use fingerprint::{
    mean_pairwise_similarity, read_fingerprints, read_fingerprints_from, similarity_or_zero, tanimoto,
    SimilarityStats,
    write_fingerprints_to, Fingerprint, FingerprintSet,
};
