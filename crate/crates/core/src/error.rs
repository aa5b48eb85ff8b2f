use thiserror::Error;

use crate::comparison_graph::GraphDiagnostics;

/// Errors raised by the estimation pipeline.
///
/// Variants fall in two families: input validation (bad indices, shapes,
/// non-positive parameters) and numerical-stage failures (rank deficiency,
/// degenerate tensors, reducible chains). [`Error::is_numerical`] separates
/// them for exit-code mapping.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("pair ({i}, {j}) is invalid for a graph on {n} vertices: {reason}")]
    InvalidPair {
        i: usize,
        j: usize,
        n: usize,
        reason: &'static str,
    },

    #[error("graph generation failed after {attempts} attempts (last: connected={}, bipartite={})", .last.connected, .last.bipartite)]
    GraphGeneration {
        attempts: usize,
        last: GraphDiagnostics,
    },

    #[error("{what} of size {size} exceeds the materialization cap {cap}; use the streaming path")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("rank deficient: needed {needed} positive eigenvalues, spectrum {spectrum:?}")]
    RankDeficient { needed: usize, spectrum: Vec<f64> },

    #[error("degenerate tensor: every power-iteration candidate has |lambda| < {threshold:e}")]
    DegenerateTensor { threshold: f64 },

    #[error("Markov chain is reducible")]
    Reducible,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of a numerical stage rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient { .. }
            | Error::DegenerateTensor { .. }
            | Error::Reducible
            | Error::GraphGeneration { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// The innermost error, with stage labels peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
