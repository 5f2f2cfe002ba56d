use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid order for entity {entity}: {value}")]
    InvalidOrder { entity: usize, value: f64 },

    #[error("game already reached its horizon of {horizon} periods")]
    HorizonReached { horizon: usize },

    #[error("entity index {0} out of range (expected 0..4)")]
    EntityIndex(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{path}:{line}: field `{field}`: {reason}")]
    Roster {
        path: PathBuf,
        line: usize,
        field: String,
        reason: String,
    },

    #[error("empty roster")]
    EmptyRoster,

    #[error("external agent seat {0} needs an agent callback")]
    MissingAgent(usize),

    #[error("objective is not finite at coordinate {coordinate} (value {value})")]
    NonFiniteObjective { coordinate: usize, value: f64 },

    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },

    #[error("all {starts} optimizer starts failed: {diagnostics}")]
    AllStartsFailed { starts: usize, diagnostics: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("weights file version {found} is not supported (expected {expected})")]
    WeightsVersion { found: u32, expected: u32 },

    #[error("corrupt weights file: {0}")]
    CorruptWeights(String),

    #[error("episode is finished; call reset first")]
    EpisodeDone,

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("unmatched summary cell: {0}")]
    UnmatchedCell(String),

    #[error("nothing to summarize or plot")]
    EmptyInput,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
