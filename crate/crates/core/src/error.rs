use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("temporal order violated: end time {end} is not after start time {start}")]
    TemporalOrder { start: f64, end: f64 },

    #[error("focal singularity: omega * dt = {phase} is within tolerance of a multiple of pi")]
    FocalSingularity { phase: f64 },

    #[error("region error: {0}")]
    Region(String),

    #[error("unsupported system: {0}")]
    UnsupportedSystem(String),

    #[error("invalid value: {0}")]
    InvalidInput(String),

    #[error("integrand is not finite at {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("simultaneous hop between distinct positions has no action")]
    NoAction,

    #[error("correction term for n = {n} is degenerate (|dphi| = {magnitude:e}, threshold {threshold:e})")]
    DegenerateCorrection {
        n: usize,
        magnitude: f64,
        threshold: f64,
    },

    #[error("normalization table was solved for a different experiment")]
    ContextMismatch,

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("language is infinite; a word-length bound is required")]
    UnboundedLanguage,

    #[error("additive behavior diverges: spectral radius estimate {radius} >= 1 - {margin:e}")]
    DivergentBehavior { radius: f64, margin: f64 },

    #[error("inclusion-exclusion needs 2^{transitions} subsets, above the cap of {cap}")]
    SubsetBlowup { transitions: usize, cap: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} failed at n = {n}: {source}")]
    Stage {
        stage: &'static str,
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str, n: usize) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                n,
                source: Box::new(other),
            },
        }
    }

    /// The error with any `Stage` wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::DegenerateCorrection { .. }
                | Error::DivergentBehavior { .. }
                | Error::NonFiniteIntegrand { .. }
                | Error::FocalSingularity { .. }
                | Error::SubsetBlowup { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
