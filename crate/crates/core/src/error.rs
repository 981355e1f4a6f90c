use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operation needs a non-empty tree")]
    EmptyTree,
    #[error("rank {rank} is outside 1..={len}")]
    RankOutOfRange { rank: usize, len: usize },
    #[error("handle does not refer to a live element")]
    StaleHandle,
    #[error("key ranges of the two trees overlap")]
    OrderViolation,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("gap index is empty")]
    EmptyIndex,
}

pub type Result<T> = std::result::Result<T, Error>;
