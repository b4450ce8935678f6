//! Maximum-entropy completion of partially specified correlation matrices.
//!
//! A partial correlation matrix fixes some off-diagonal coefficients and
//! leaves the rest open. When the graph of specified entries is chordal,
//! the completion with the largest determinant is obtained in closed form
//! by walking a clique tree and filling each new block with
//! `W = B C^-1 D`, where `C` is the separator block shared by the new
//! clique and everything completed so far.
//!
//! The crate is organised as:
//!
//! * [`pattern`]: labels, partial and dense matrices, JSON/CSV formats
//! * [`graph`]: pattern graphs, chordality, maximal cliques, clique trees
//! * [`linalg`]: dense Cholesky kernel, SPD solves, Schur complements
//! * [`completion`]: the clique-tree merge engine
//! * [`verify`]: independent checks of the optimality conditions
//! * [`models`]: cross-currency and N-currency fixtures
//! * [`sampling`]: reproducible random chordal instances

pub mod completion;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod models;
pub mod pattern;
pub mod sampling;
pub mod verify;

pub use completion::{
    complete, complete_with, CompletionOptions, CompletionReport, MergeStep, RootPolicy,
};
pub use error::{Error, Result};
pub use graph::{CliqueTree, PatternGraph};
pub use linalg::SymMatrix;
pub use pattern::{DenseCorrMatrix, Format, Label, PartialMatrix};
pub use verify::VerificationResult;
