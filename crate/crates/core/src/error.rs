use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("degenerate range: lo={lo} must be below hi={hi}")]
    DegenerateRange { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate truncation: acceptance rate {rate:.2e} after {attempts} proposals")]
    DegenerateTruncation { rate: f64, attempts: u64 },

    #[error("context outside prior support")]
    ContextOutsideSupport,

    #[error("no particle mass; increase M or h")]
    NoParticleMass,

    #[error("budget too small for cost prior (B={0}, need B > 1)")]
    BudgetTooSmall(f64),

    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),

    #[error("cost {0} must be strictly positive")]
    NonPositiveCost(f64),

    #[error("arm {0} exhausted")]
    ArmExhausted(String),

    #[error("unknown arm index {0}")]
    UnknownArm(usize),

    #[error("posterior estimate failed for arm {arm}: {source}")]
    Ppd {
        arm: String,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate key {0}")]
    DuplicateKey(String),

    #[error("trajectory file has no cost column but a cost-aware run was requested")]
    MissingCost,

    #[error("missing result for policy {policy} on task {task}")]
    MissingCell { policy: String, task: String },

    #[error("initialization infeasible: {0}")]
    InitializationInfeasible(String),

    #[error("unknown policy {0:?}")]
    UnknownPolicy(String),

    #[error("unknown prior preset {0:?} (expected one of: flat, semi-flat, curved, custom)")]
    UnknownPreset(String),

    #[error("missing artifact {}", .0.display())]
    MissingArtifact(std::path::PathBuf),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sequence {sequence_id}: {source}")]
    CorpusWrite {
        sequence_id: u64,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input data
    /// (as opposed to failures while running an experiment).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::DuplicateKey(_)
                | Error::MissingCost
                | Error::RewardOutOfRange(_)
                | Error::NonPositiveCost(_)
                | Error::DegenerateRange { .. }
                | Error::Config(_)
                | Error::UnknownPolicy(_)
                | Error::UnknownPreset(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::MissingCell { .. }
                | Error::MissingArtifact(_)
        )
    }
}
