use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backward pass requested before a forward pass")]
    NoForwardCache,
    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("episode already finished; call reset first")]
    EpisodeDone,
    #[error("unknown agent id {0}")]
    UnknownAgent(usize),
    #[error("agent {0} is not alive")]
    DeadAgent(usize),
    #[error("missing action for agent {0}")]
    MissingAction(usize),
    #[error("transfer buffer of agent {0} is empty")]
    EmptyBuffer(usize),
    #[error("agent {agent} has {len} recorded episodes, window needs {window}")]
    ShortHistory { agent: usize, len: usize, window: usize },
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("cannot compare runs: {0}")]
    Mismatch(String),
    #[error("malformed csv {path}: {reason}")]
    Csv { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
