use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("action index {index} out of range (must be < 3^{cells})")]
    ActionIndexOutOfRange { index: u128, cells: usize },

    #[error("environment has not been reset")]
    NotReset,

    #[error("episode finished after {0} steps; call reset")]
    EpisodeFinished(usize),

    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
