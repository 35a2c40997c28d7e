use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("objective is not finite after perturbing coordinate {coordinate} (value {value})")]
    NonFiniteObjective { coordinate: usize, value: f64 },

    #[error("matrix is not Hermitian positive definite")]
    NotPositiveDefinite,

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("cannot parse scene: {0}")]
    SceneParse(#[from] toml::de::Error),

    #[error("cannot serialize scene: {0}")]
    SceneSerialize(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
