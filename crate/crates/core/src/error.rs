use thiserror::Error;

/// Input and domain errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("explicit deletion sequence has {len} entries, p_{index} requested")]
    SequenceTooShort { index: usize, len: usize },
    #[error("deletion proportion p_{index} = {value} lies outside {range}")]
    InvalidProportion {
        index: usize,
        value: String,
        range: &'static str,
    },
    #[error("{what} = {value} lies outside {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("degenerate fit range: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
