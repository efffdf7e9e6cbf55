use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too coarse: need at least {min} nodes per axis, got {got}")]
    GridTooCoarse { min: usize, got: usize },

    #[error("non-square cells: nx = {nx}, ny = {ny}")]
    NonSquareCells { nx: usize, ny: usize },

    #[error("field shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular linear system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("state solve did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("line search failed at iteration {iteration}: step underflow")]
    LineSearch { iteration: usize },

    #[error("mollifier kernel under-resolved: epsilon = {epsilon} < h = {h}")]
    KernelUnderResolved { epsilon: f64, h: f64 },

    #[error("unknown manufactured case '{0}'")]
    UnknownCase(String),

    #[error("config{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
