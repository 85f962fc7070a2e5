use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("code distance must be odd and at least 3, got {0}")]
    InvalidDistance(usize),
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("frame has a nontrivial syndrome; logical class is undefined")]
    NontrivialSyndrome,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("correction chain for check {check} does not reproduce its single-event syndrome")]
    InvalidChain { check: usize },
    #[error("matching instance has no perfect matching ({nodes} nodes)")]
    InfeasibleMatching { nodes: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid layer dimensions: {0}")]
    InvalidDims(String),
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("incompatible model: {0}")]
    IncompatibleModel(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
