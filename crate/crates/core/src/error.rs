use thiserror::Error;

/// Errors raised by model construction, oracles and protocol setup.
///
/// Protocol-level failures of a prover (malformed messages, failed audits)
/// are verdicts, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("arm index {arm} out of range for a bandit with {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("player index {player} out of range for a game with {players} players")]
    PlayerOutOfRange { player: usize, players: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("enumeration over {n} arms refused (limit {limit})")]
    EnumerationTooLarge { n: usize, limit: usize },

    #[error("oracle budget of {budget} pulls exhausted")]
    BudgetExhausted { budget: u64 },

    #[error("empty input")]
    EmptyInput,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
