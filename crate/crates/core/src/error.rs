use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("factor weights sum to {sum}, expected 1")]
    WeightSum { sum: String },

    #[error("invalid factor: {0}")]
    InvalidFactor(String),

    #[error("grid of {atoms} atoms exceeds the guard of {limit}")]
    AtomGuard { atoms: u128, limit: u64 },

    #[error("{what} enumeration over {n} coordinates exceeds the guard of {limit}")]
    SubsetGuard { what: &'static str, n: usize, limit: usize },

    #[error("coordinate {coord} out of range [1, {n}]")]
    CoordOutOfRange { coord: usize, n: usize },

    #[error("functions live on different product spaces")]
    SpaceMismatch,

    #[error("scalar mode mismatch: {0}")]
    ScalarMode(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function is not measurable with respect to coordinates {coords:?} (deviation {deviation:e})")]
    Measurability { coords: Vec<usize>, deviation: f64 },

    #[error("factor {coord} is not a uniform cyclic group")]
    NonGroupFactor { coord: usize },

    #[error("space is not a discretized torus: {0}")]
    NotTorus(String),

    #[error("frequency entry {entry} is ambiguous at the Nyquist index of Z_{modulus}")]
    Nyquist { entry: i64, modulus: usize },

    #[error("invalid difference family: {0}")]
    InvalidFamily(String),

    #[error("family is not linearly ordered")]
    UnorderedFamily,

    #[error("expected a mean-zero input, got mean of modulus {0:e}")]
    NonzeroMean(f64),

    #[error("sampler produced a function outside the claimed subspace (deviation {0:e})")]
    OutOfSubspace(f64),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
