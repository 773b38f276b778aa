use std::io;

use thiserror::Error;

/// Errors produced anywhere in the mesh improvement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh format: {0}")]
    Format(String),

    #[error("face {face} references vertex {index}, but only {count} vertices exist")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("unsupported topology: {0}")]
    Topology(String),

    #[error("face {face} is degenerate (signed area {area:e})")]
    Degenerate { face: usize, area: f64 },

    #[error("degenerate triangle (area {0:e})")]
    DegenerateTriangle(f64),

    #[error("cannot place vertex: opposite angle has sine {0:e}")]
    DegeneratePlacement(f64),

    #[error("argument {0} is not finite")]
    Domain(f64),

    #[error("singular argument {0}: too close to a multiple of pi")]
    Singularity(f64),

    #[error("initial angle structure is infeasible (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("mesh 1-skeleton is disconnected")]
    Disconnected,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
