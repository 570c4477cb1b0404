use thiserror::Error;

/// Errors raised by the schema-average library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("string length mismatch: {left} vs {right}")]
    LengthMismatch { left: u32, right: u32 },

    #[error("string length {0} outside supported range 1..=62")]
    LengthOutOfRange(u32),

    #[error("value {bits:#x} does not fit in {len} bits")]
    BitsOutOfRange { bits: u64, len: u32 },

    #[error("dense representation needs length <= {max}, got {len}")]
    DenseTooLarge { len: u32, max: u32 },

    #[error("packed index {index} out of range for a mask of order {order}")]
    IndexOutOfRange { index: u64, order: u32 },

    #[error("mask {sub} is not contained in mask {sup}")]
    NotSubMask { sub: String, sup: String },

    #[error("fitness must be strictly positive, got {value} for {genome}")]
    NonPositiveFitness { genome: String, value: String },

    #[error("no fitness value for {0}")]
    MissingFitness(String),

    #[error("population is empty")]
    EmptyPopulation,

    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("transform size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical contract violated: {0}")]
    NumericalContract(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
