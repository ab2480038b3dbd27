//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced while building meshes, bases and systems or while solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Geometric validation failed (negative volume, dangling face, ...).
    #[error("mesh validation: {0}")]
    MeshValidation(String),

    /// Text mesh input rejected; carries the 1-based line number.
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    /// A DOF-Vandermonde matrix failed to invert. The unisolvence of the
    /// degree-of-freedom sets guarantees this cannot happen for valid input,
    /// so this signals an internal inconsistency.
    #[error("singular DOF-Vandermonde for {space} order {order} (cell {cell:?})")]
    SingularVandermonde {
        space: &'static str,
        order: usize,
        cell: Option<usize>,
    },

    #[error("material validation: {0}")]
    MaterialValidation(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("ill-conditioned solve: relative residual {residual:.3e} exceeds {limit:.3e}")]
    IllConditioned { residual: f64, limit: f64 },

    #[error("eigenproblem size {size} exceeds cap {cap}; use a smaller mesh")]
    EigenSizeCap { size: usize, cap: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
