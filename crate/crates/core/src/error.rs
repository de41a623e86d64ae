use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("node {0} has zero degree")]
    DegenerateNode(usize),

    #[error("graph is not connected ({components} components); restrict to the largest connected component first")]
    Disconnected { components: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sample carries no block labels")]
    MissingLabels,

    #[error("block {0} has no samples")]
    EmptyBlock(usize),

    #[error("block transition undefined: observed block {0} never refers anyone (enable smoothing)")]
    UndefinedTransition(usize),

    #[error("block equilibrium undefined: estimated transition {from}->{to} is zero (enable smoothing)")]
    UndefinedPi { from: usize, to: usize },

    #[error("sampling failed after {restarts} restarts")]
    SamplingFailure { restarts: usize },

    #[error("enumeration too large: {size} states exceeds guard {guard}")]
    SizeGuard { size: f64, guard: f64 },

    #[error("precondition 2(1-2p)^2 > 1 violated: p = {p} gives {value}")]
    ScalingPrecondition { p: f64, value: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::DegenerateNode(_) => "degenerate_node",
            Error::Disconnected { .. } => "disconnected",
            Error::Parse { .. } => "parse",
            Error::MissingLabels => "missing_labels",
            Error::EmptyBlock(_) => "empty_block",
            Error::UndefinedTransition(_) => "undefined_transition",
            Error::UndefinedPi { .. } => "undefined_pi",
            Error::SamplingFailure { .. } => "sampling_failure",
            Error::SizeGuard { .. } => "size_guard",
            Error::ScalingPrecondition { .. } => "scaling_precondition",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }
}
