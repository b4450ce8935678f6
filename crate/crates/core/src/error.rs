use thiserror::Error;

/// Errors produced while parsing, analysing or completing a partial
/// correlation matrix.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input, bad labels, out-of-range coefficients and the like.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The pattern graph has a chordless cycle of length four or more.
    /// `cycle` lists the labels around the cycle in order.
    #[error("pattern graph is not chordal; chordless cycle: {}", .cycle.join(" - "))]
    NotChordal { cycle: Vec<String> },

    /// A fully specified clique block is not strictly positive definite.
    #[error("clique block {{{}}} is not positive definite", .labels.join(", "))]
    CliqueBlockNotPd { labels: Vec<String> },

    /// Cholesky factorization broke down at `pivot`.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// Two blocks that must share their separator block disagree.
    #[error("separator blocks disagree at ({row}, {col}): {left} vs {right}")]
    SeparatorMismatch {
        row: String,
        col: String,
        left: f64,
        right: f64,
    },

    /// The numeric oracle could not find a positive definite starting point.
    #[error("no positive definite completion found: {0}")]
    NoFeasiblePoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
