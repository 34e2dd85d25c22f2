//! Difference-of-submodular minimization with applications to discriminative
//! tree structure learning and budgeted feature selection.
//!
//! The crate is layered bottom-up:
//!
//! - [`set`]: ground sets, bit-indexed subsets, normalized set-function
//!   oracles, and brute-force structural property checks.
//! - [`polymatroid`]: Edmonds' greedy chain construction of tight modular
//!   lower bounds and base-polytope queries.
//! - [`sfm`]: submodular minimization engines (exhaustive, Queyranne
//!   pendant-pair, minimum-norm point).
//! - [`ssp`]: the submodular–supermodular descent procedure with restarts
//!   and exchange-neighborhood certification.
//! - [`model`]: class-conditional probability models (discrete tables and
//!   zero-mean Gaussians) and their information-theoretic oracles.
//! - [`tree`]: Chow–Liu and discriminative spanning-tree learners, tree-fit
//!   classifiers, and error evaluation.
//! - [`harness`]: report-producing commands behind the CLI.

pub mod error;
pub mod harness;
pub mod model;
pub mod polymatroid;
pub mod set;
pub mod sfm;
pub mod ssp;
pub mod tree;
