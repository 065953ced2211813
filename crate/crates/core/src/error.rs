use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inadmissible state in cell {cell} at t = {time}: {state:?}")]
    Inadmissible {
        cell: isize,
        time: f64,
        state: Vec<f64>,
    },

    #[error("implicit solve did not converge in cell {cell} after {iterations} iterations (residual {residual:e})")]
    NewtonFailure {
        cell: isize,
        iterations: usize,
        residual: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown preset `{id}`; valid presets: {}", valid.join(", "))]
    UnknownPreset { id: String, valid: Vec<String> },

    #[error("pole of the stability function at z2 = {0}")]
    StabilityPole(num_complex::Complex64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the time integrator itself (as opposed to bad
    /// input or I/O).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Inadmissible { .. } | Error::NewtonFailure { .. }
        )
    }
}
