use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("outside the domain: {0}")]
    OutOfDomain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integration diverged at substep {substep}")]
    Divergence { substep: usize },

    #[error("no path to goal cell {goal}")]
    Unreachable { goal: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
