use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the computation and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The superfluid velocity is too large for the first-order expansion.
    #[error("perturbation domain: |v_s| = {speed:.6e} m/s is not below v_crit = {critical:.6e} m/s")]
    PerturbationDomain { speed: f64, critical: f64 },

    #[error("gap equation has no root in (0, debye energy): {0}")]
    NoSolution(String),

    #[error("no convergence after {iterations} iterations: {what}")]
    Convergence { what: String, iterations: usize },

    #[error("under-resolved grid: {0}")]
    Resolution(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("branches are indistinguishable (delta N_tot = {0})")]
    UndistinguishableBranches(f64),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("schema violation in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("failed to parse {path}: {cause}")]
    Parse {
        path: PathBuf,
        cause: serde_json::Error,
    },

    #[error("i/o error on {path}: {cause}")]
    Io {
        path: PathBuf,
        cause: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// An error from a component operation, tagged with the module that raised it.
    #[error("[{module}] {inner}")]
    Stage {
        module: &'static str,
        inner: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_module(self, module: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                module,
                inner: Box::new(other),
            },
        }
    }

    /// The innermost error, with module tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { inner, .. } => inner.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Reject NaN and infinities with a labelled domain error.
pub(crate) fn ensure_finite(label: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(format!("{label} must be finite, got {value}")))
    }
}
