//! Unlabeled sensing: recovering `x` from `y = S A x` when the selection `S`
//! of rows of the known matrix `A` is unknown.
//!
//! - [`densela`]: least squares, rank, null spaces, determinants.
//! - [`model`]: instances, selections, seeded generators.
//! - [`cycles`]: cycle decomposition of a true/candidate selection pair.
//! - [`solver`]: exact recovery by candidate enumeration, with pruning.
//! - [`robust`]: noisy recovery and principal-angle distance.
//! - [`adversary`]: explicit ambiguous pairs when `N < 2K`.
//! - [`harness`]: CSV/JSON I/O, Monte Carlo campaigns and the CLI.

pub mod adversary;
pub mod cycles;
pub mod densela;
pub mod error;
pub mod harness;
pub mod model;
pub mod robust;
pub mod solver;

pub use densela::{LsqResult, Mat};
pub use error::{Error, Result};
pub use model::{EntryDist, Instance, NoiseSpec, Selection};
pub use solver::{RecoveryReport, SolveConfig, Status};
