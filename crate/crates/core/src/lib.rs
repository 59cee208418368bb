//! Groups part detections into poses by solving a two-tier assignment LP with
//! Benders row generation and column generation, then rounds to an integral
//! solution. A pure column-generation solver and an exhaustive oracle cover
//! the same model for cross-checking.

pub mod bcg;
pub mod cli;
pub mod columns;
pub mod lp_core;
pub mod model;
pub mod oracle;
pub mod pcg;
pub mod pricing;
pub mod rounding;

use thiserror::Error as ThisError;

/// Crate-wide error type. The CLI maps each variant family to a distinct
/// process exit code.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("io error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("problem too large: {0}")]
    SizeGuard(String),
}
