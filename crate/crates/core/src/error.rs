use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("node {node} out of range for a network of {len} nodes")]
    InvalidNode { node: usize, len: usize },
    #[error("invalid economy: {0}")]
    InvalidEconomy(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("instance too large: {size} exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("contract violation: {0}")]
    Contract(&'static str),
}
