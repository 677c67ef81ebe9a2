use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no voters")]
    NoVoters,
    #[error("no electable candidate: every ballot is empty")]
    NoElectableCandidate,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("distributions are over different outcome spaces")]
    OutcomeSpaceMismatch,
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
