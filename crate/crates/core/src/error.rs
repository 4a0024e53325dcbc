use thiserror::Error;

use crate::hardy::AtomCertificate;

pub type Result<T> = std::result::Result<T, VilenkinError>;

#[derive(Debug, Error)]
pub enum VilenkinError {
    #[error("radix {radix} at position {position} is below 2")]
    RadixTooSmall { position: usize, radix: u64 },

    #[error("invalid radix specification {spec:?}: {reason}")]
    RadixSpec { spec: String, reason: String },

    #[error("grid size M_{resolution} exceeds the cap {cap}")]
    GridTooLarge { resolution: usize, cap: u64 },

    #[error("value {value} is out of range (limit {limit})")]
    OutOfRange { value: u64, limit: u64 },

    #[error("rank {rank} exceeds resolution {resolution}")]
    RankOutOfRange { rank: usize, resolution: usize },

    #[error("grid functions live on different radix systems")]
    SystemMismatch,

    #[error("length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("exponent p = {p} outside the admissible range {range}")]
    Exponent { p: f64, range: &'static str },

    #[error("invalid weight sequence: {0}")]
    Weight(String),

    #[error("resolution {resolution} is insufficient: {reason}")]
    ResolutionInsufficient { resolution: usize, reason: String },

    #[error("candidate {index} is not a p-atom")]
    InvalidAtom {
        index: usize,
        certificate: Box<AtomCertificate>,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
