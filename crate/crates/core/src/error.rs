use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("player index {index} out of range for a {players}-player game")]
    PlayerOutOfRange { index: usize, players: usize },

    #[error("invalid risk level {value} for player {player}: must lie in (0, 1]")]
    InvalidRiskLevel { player: usize, value: f64 },

    #[error("invalid interval for {name}: lower bound {lo} exceeds upper bound {hi}")]
    InvalidInterval { name: String, lo: f64, hi: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("candidate distribution {index} is not a member of the ambiguity set")]
    NonMemberCandidate { index: usize },

    #[error("ambiguity set inconsistent: robust program returned {status:?} ({detail})")]
    AmbiguityInconsistent { status: LpStatus, detail: String },

    #[error("linear program failed with status {status:?}: {detail}")]
    LpFailure { status: LpStatus, detail: String },

    #[error("game too large: {0}")]
    TooLarge(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("game file error: {0}")]
    GameFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
