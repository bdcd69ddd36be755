//! Conditionally collaborative active learning (C2AL).
//!
//! Several collaborators hold private feature views of a shared unlabeled
//! pool and private base models. They jointly explore the pool by exchanging
//! only prediction results and newly acquired labels: per round, everyone
//! broadcasts base-model probabilities (Level 1), then ensemble probabilities
//! (Level 2), the coordinator selects instances round-robin by uncertainty,
//! acquires labels from the annotation oracle and broadcasts them, and each
//! collaborator retrains a stacked ensemble over its own view plus everyone's
//! Level-1 probabilities. Raw features and model parameters never cross the
//! trust boundary.
//!
//! The crate is organized along the moving parts of that loop:
//!
//! - [`synthdata`]: synthetic datasets, feature partitions, instance splits
//! - [`learners`]: from-scratch probabilistic classifiers and band bootstrapping
//! - [`ensemble`]: stacked ensemble inputs and retraining
//! - [`sampling`]: uncertainty ranking and round-robin selection
//! - [`protocol`]: the round engine, message schemas and the session log
//! - [`metrics`]: observer-side AUC and permutation importance
//! - [`cli`]: scenario configs and the `generate`/`run`/`report` commands

pub mod cli;
pub mod ensemble;
mod error;
pub mod learners;
pub mod metrics;
pub mod protocol;
pub mod sampling;
pub mod synthdata;
pub mod util;

pub use error::{Error, Result};
