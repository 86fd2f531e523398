// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the coreset constructions, solvers and dataset IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("points do not lie on a {j}-flat: singular value {sigma:e} exceeds tolerance {tol:e}")]
    FlatRank { j: usize, sigma: f64, tol: f64 },

    #[error("point set has affine rank {rank}, full rank {dim} required")]
    Rank { rank: usize, dim: usize },

    #[error("rounding did not converge after {iterations} iterations (achieved factor {achieved})")]
    Convergence { iterations: usize, achieved: f64 },

    /// The query point is outside the hull. `normal`/`offset` describe a
    /// separating hyperplane: `normal·q + offset <= 0` for every hull point
    /// while `normal·s + offset > 0`.
    #[error("point is outside the convex hull (infeasibility {gap:e})")]
    NotInHull {
        gap: f64,
        normal: Vec<f64>,
        offset: f64,
    },

    #[error("integer grid input with a declared aspect ratio is required")]
    GridRequired,

    #[error("nonzero distance {distance:e} is below the band floor {floor:e}; raise c_exp")]
    LowerBoundViolation { distance: f64, floor: f64 },

    #[error("recursion budget of {cap} nodes exceeded")]
    Budget { cap: usize },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("initialization needs at least {needed} points, got {got}")]
    Init { needed: usize, got: usize },

    #[error("column {0:?} not found")]
    Column(String),

    #[error("row {row}, column {column:?}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
