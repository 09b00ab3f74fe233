use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("basis mismatch: `{left}` vs `{right}`")]
    Basis { left: String, right: String },

    #[error("operator is not diagonal in basis `{0}`")]
    NotDiagonal(String),

    #[error("domain error: function undefined at eigenvalue {eigenvalue}")]
    Domain { eigenvalue: f64 },

    #[error("invalid window [{lo}, {hi}]: {reason}")]
    Window { lo: i64, hi: i64, reason: String },

    #[error("baker resolution m = {0} outside 1..=6")]
    BakerSize(i64),

    #[error("support outside interior margin for t = {t}: labels {labels:?}")]
    Margin { t: i64, labels: Vec<String> },

    #[error("negative time t = {0}: the semigroup is only defined for t >= 0")]
    NegativeTime(i64),

    #[error("operation requires a baker system")]
    NotBaker,

    #[error("invalid lambda profile: {0}")]
    Profile(String),

    #[error("profile is not admissible: {0}")]
    NotAdmissible(String),

    #[error("lambda vanishes at age {age}: the transformation is not injective")]
    NotInjective { age: i64 },

    #[error("outside materialized domain: log-weight {log_weight} exceeds cap {cap} ({context})")]
    OutsideDomain { log_weight: f64, cap: f64, context: String },

    #[error("invalid spectrum: {0}")]
    Spectrum(String),

    #[error("invalid grades: {0}")]
    Grades(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
