use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("indeterminate comparison at {at} (precision cap reached)")]
    Indeterminate { at: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("input too short: need {need}, have {have}")]
    Length { need: usize, have: usize },
    #[error("allocation error at request {index}: budget exceeded")]
    Budget { index: usize },
    #[error("hypothesis ({clause}) violated: {detail}")]
    Hypothesis { clause: String, detail: String },
    #[error("search exhausted: {0}")]
    Exhausted(String),
    #[error("unresolved cells: {0:?}")]
    Unresolved(Vec<String>),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
