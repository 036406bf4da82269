use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("stencil unavailable at node {node}: {reason}")]
    StencilUnavailable { node: usize, reason: &'static str },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("rank-deficient least-squares fit: {0}")]
    RankDeficient(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("u = {value} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),

    #[error("singular linear system (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {last:e})")]
    NonConvergence { iterations: usize, last: f64, history: Vec<f64> },

    #[error("incompatible flux data: {0}")]
    IncompatibleFlux(String),

    #[error("no sign change of the upper contact-angle mismatch in [{lo}, {hi}]")]
    NoSolutionInBracket { lo: f64, hi: f64 },

    #[error("meridian reached the axis or stopped being monotone at height {height}")]
    TopologyChange { height: f64 },

    #[error("plane normal is not parallel to the plates (|n . axis| = {0:e})")]
    Orientation(f64),

    #[error("reflected cap is empty")]
    EmptyCap,

    #[error("scenario precondition violated: {0}")]
    Scenario(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Wrap an error with the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}
