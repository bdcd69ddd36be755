use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("collaborator {collaborator} may not read feature {feature}")]
    ForeignFeature { collaborator: usize, feature: usize },

    #[error("unknown instance id {0}")]
    UnknownInstance(u32),

    #[error("invalid training data: {0}")]
    InvalidTrainingData(String),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("input has {got} columns, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error(
        "collaborator {collaborator}: AUC band [{low}, {high}] not reached \
         after {attempts} attempts (best {best:.4})"
    )]
    BandUnreachable {
        collaborator: usize,
        low: f64,
        high: f64,
        attempts: usize,
        best: f64,
    },

    #[error("no level-1 coverage for labeled instance {0}")]
    MissingCoverage(u32),

    #[error("selection needs {needed} unique instances, rankings supply {available}")]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("pool has {remaining} instances, round needs {needed}")]
    PoolExhausted { remaining: usize, needed: usize },

    #[error("report input: {0}")]
    ReportInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from user-supplied configuration rather than a
    /// runtime failure. The CLI maps this to a distinct exit code.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_) | Error::InvalidConfig(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
