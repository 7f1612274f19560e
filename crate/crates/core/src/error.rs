use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid argument value (odd Watts-Strogatz degree, r > n, alpha < 1, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A theoretical precondition of the routine does not hold (bipartite graph, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("data error: {0}")]
    Data(String),

    /// Enumeration oracle would exceed its branch budget.
    #[error("combinatorial limit exceeded: {0}")]
    Combinatorial(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
