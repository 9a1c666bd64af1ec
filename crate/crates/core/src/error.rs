use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid symbol {0}; expected 1, 2 or 3")]
    InvalidSymbol(char),
    #[error("invalid IFS: {0}")]
    InvalidIfs(String),
    #[error("cells overlap: {0} is a prefix of {1}")]
    OverlappingCells(String, String),
    #[error("empty word set")]
    EmptyWordSet,
    #[error("n must be at least 1")]
    ZeroPoints,
    #[error("malformed optimal-set spec: {0}")]
    MalformedSpec(String),
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("point set contains duplicate point {0}")]
    DuplicatePoint(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enclosure width {width:e} did not reach the requested tolerance by depth {depth}")]
    NotExact { width: f64, depth: u32 },
    #[error("{0} is outside [1, 2]")]
    OutOfDomain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
