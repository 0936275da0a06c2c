use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid axes: {0}")]
    Axis(String),

    #[error("matrix is rank deficient (smallest/largest singular value {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("requested {rows}x{cols} isometry has more rows than columns")]
    TallIsometry { rows: usize, cols: usize },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid qubit selection: {0}")]
    Qubits(String),

    #[error("constraint violated on {id}: deviation {deviation:e}")]
    Constraint { id: String, deviation: f64 },

    #[error("system too large for dense representation: {n} qubits (cap {cap})")]
    TooLarge { n: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error("run aborted after {} gates: {reason}", .record.gates.len())]
    Aborted {
        reason: String,
        record: Box<crate::sim::SimulationRecord>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Axis(_) => "axis",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::TallIsometry { .. } => "tall_isometry",
            Error::NotUnitary { .. } => "not_unitary",
            Error::NonFinite(_) => "non_finite",
            Error::Qubits(_) => "qubits",
            Error::Constraint { .. } => "constraint",
            Error::TooLarge { .. } => "too_large",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Aborted { .. } => "aborted",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
