use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("invalid action spec: {0}")]
    Spec(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("expression does not fit the action: {0}")]
    Expr(String),
    #[error("atom cap exceeded: {needed} atoms needed, cap is {cap}")]
    AtomCap { cap: usize, needed: usize },
    #[error("depth error: {0}")]
    Depth(String),
    #[error("refused: {0}")]
    Refusal(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
