//! Hybrid quantum-classical regression toolkit.
//!
//! The crate is organised around the stages of a molecular property
//! regression pipeline:
//!
//! * [`ingest`]: CSV loading, curation, feature filtering, z-score
//!   normalisation and repeated k-fold plans.
//! * [`chem`]: fingerprint similarity, Butina clustering and derived
//!   orbital descriptors.
//! * [`qsim`]: a statevector simulator with angle encoding, Pauli-Z readout
//!   and two gradient routes (parameter shift and adjoint).
//! * [`models`]: MLP head, patch-style hybrid quantum network, gradient
//!   boosted trees, random forests and weighted voting.
//! * [`train`]: metrics, optimisers, network training, cross-validation and
//!   grid search.
//! * [`synth`]: seeded synthetic datasets for desk-scale runs.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Every
//! reduction is performed in a fixed order so results are bitwise identical
//! across thread counts and across the two builds.

pub mod chem;
pub mod error;
pub mod ingest;
pub mod models;
pub mod par;
pub mod qsim;
pub mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
