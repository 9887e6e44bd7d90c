use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or quality lies outside the domain the model is defined on.
    #[error("{field} = {value} is out of domain: {reason}")]
    Domain {
        field: &'static str,
        value: String,
        reason: &'static str,
    },

    /// Parameters are individually valid but cannot be combined.
    #[error("invalid configuration: {0}")]
    Configuration(String),

    /// The completeness condition is only defined for beta < 1.
    #[error("completeness condition is not applicable at beta = 1")]
    NotApplicable,

    /// Seller `k` never trades, so conditional averages over its buyers do not exist.
    #[error("seller quality {k} has zero sale probability; conditional is undefined")]
    UndefinedConditional { k: u32 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    IterationLimit {
        iterations: u64,
        residual: f64,
        last: Vec<f64>,
    },

    /// Config file or flag problem; `field` names the offending key.
    #[error("{location}{field}: {message}")]
    Parse {
        location: String,
        field: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(field: &'static str, value: impl ToString, reason: &'static str) -> Self {
        Error::Domain {
            field,
            value: value.to_string(),
            reason,
        }
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: String::new(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI: 2 parse, 3 non-convergence, 4 I/O, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Domain { .. } | Error::Configuration(_) => 2,
            Error::IterationLimit { .. } => 3,
            Error::Io { .. } | Error::Json(_) => 4,
            Error::NotApplicable | Error::UndefinedConditional { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
