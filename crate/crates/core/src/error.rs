use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("label mismatch: {left:?} vs {right:?}")]
    LabelMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },

    #[error("KLD undefined: absolute continuity violated at `{label}` (r = {r}, s = 0)")]
    KldUndefined { label: String, r: f64 },

    #[error("empty joint table")]
    EmptyJointTable,

    #[error("invalid joint table: {0}")]
    InvalidJointTable(String),

    #[error("degenerate outcome distribution: Resp(Z) undefined")]
    DegenerateOutcome,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid payoffs: {0}")]
    InvalidPayoffs(String),

    #[error("zero denominator in posterior: {0}")]
    ZeroDenominator(&'static str),

    #[error("invalid action set: {0}")]
    InvalidActionSet(String),

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("event log: {0}")]
    EventLog(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("sweep cell (e = {e}, d_human = {d_human}, d_system = {d_system}): {source}")]
    SweepCell {
        e: f64,
        d_human: f64,
        d_system: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
