use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("weight model is not subcritical (tau'(1) = {tau_prime_one})")]
    NotSubcritical { tau_prime_one: f64 },
    #[error("depth {depth} needs {cells} cells, above the limit of {limit}")]
    DepthTooLarge { depth: u32, cells: u128, limit: u64 },
    #[error("level {level} is outside [0, {depth}]")]
    BadLevel { level: u32, depth: u32 },
    #[error("cell index {index} is out of range at level {level}")]
    BadCell { level: u32, index: u64 },
    #[error("every cell has zero mass")]
    AllMassZero,
    #[error("curve speed degenerates near parameter {at}")]
    DegenerateSpeed { at: f64 },
    #[error("curvature vanishes near parameter {at}")]
    CurvatureVanishes { at: f64 },
    #[error("quadrature did not reach tolerance {tol} (last change {change})")]
    ToleranceUnachievable { tol: f64, change: f64 },
    #[error("expected spatial dimension {expected}, got {actual}")]
    DimensionMismatch { expected: u32, actual: u32 },
    #[error("frequency magnitude {0} is below 1")]
    InvalidFrequency(f64),
    #[error("need at least 3 points for a fit, got {0}")]
    TooFewPoints(usize),
    #[error("magnitude {0} is not positive")]
    NonpositiveMagnitude(f64),
    #[error("all {0} realizations went extinct")]
    AllExtinct(usize),
    #[error("malformed mass file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
