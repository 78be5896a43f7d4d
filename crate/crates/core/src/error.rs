use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("inverse temperature is infinite at p = 0")]
    InfiniteBeta,

    #[error("correlation length diverged: chi(k_min) is zero")]
    Diverged,

    #[error("unphysical susceptibility ratio: chi(0) = {chi0} < chi(k_min) = {chik}")]
    Unphysical { chi0: f64, chik: f64 },

    #[error("no crossing in the common temperature window")]
    NoCrossing,

    #[error("phase boundary does not bracket the Nishimori line (T_c - T_N = {first:+.4} at p = {p_first}, {last:+.4} at p = {p_last})")]
    BracketFailure {
        p_first: f64,
        first: f64,
        p_last: f64,
        last: f64,
    },

    #[error("state space too large for enumeration: {0} states")]
    StateSpaceTooLarge(u128),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed store: {0}")]
    Store(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
