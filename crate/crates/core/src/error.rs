use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("distribution support {size} exceeds cap {cap}")]
    SupportTooLarge { size: usize, cap: usize },
    #[error("not a sub-path")]
    NotSubPath,
    #[error("not assemblable: {0}")]
    NotAssemblable(String),
    #[error("inconsistent assembly: pre-normalization deficit {0}")]
    AssemblyDeficit(f64),
    #[error("support mismatch: truth cost {0} has zero estimate mass")]
    SupportMismatch(u32),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("unknown edge '{0}'")]
    UnknownEdge(String),
    #[error("path is disconnected at position {0}")]
    Disconnected(usize),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("tau must be at least 1")]
    InvalidTau,
    #[error("no overlap between units")]
    NoOverlap,
    #[error("horizon too small: vertex {vertex} does not saturate within {horizon} units")]
    HorizonTooSmall { vertex: String, horizon: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no graph for period at departure time {0}")]
    NoGraphForPeriod(u64),
    #[error("instance too large for oracle: more than {0} paths")]
    OracleTooLarge(usize),
    #[error("variant disagreement: {0}")]
    Disagreement(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
