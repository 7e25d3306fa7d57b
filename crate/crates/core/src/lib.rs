//! Experiment harness for studying how data partitioning strategies affect
//! the generalization of morphological segmentation models.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`corpus`]: segmented words, corpus files, label encoding, synthetic data
//! * [`splitter`]: random, adversarial and heuristic splits and the experiment grid
//! * [`models`]: a linear-chain CRF, three baselines and an external-process adapter
//! * [`evaluation`]: F1 variants, model rankings and cross-split aggregates
//! * [`stats`]: ordinary least squares with interaction terms
//! * [`runner`]: end-to-end experiment execution, resumption and reports

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod runner;
pub mod splitter;
pub mod stats;

pub use error::{Error, Result};
