use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid collision signature: {0}")]
    InvalidSignature(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("unsupported operation for this measure kind: {0}")]
    Unsupported(String),
    #[error("quadrature did not converge (achieved error estimate {achieved:.3e}, requested {requested:.3e})")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },
    #[error("division by zero rational function")]
    DivisionByZero,
    #[error("vanishing denominator at the supplied parameter value")]
    VanishingDenominator,
    #[error("negative rate after consistency substitution: {name} = {value}")]
    NegativeRate { name: String, value: f64 },
    #[error("Kingman degeneracy: a4 + 3 a22 = 0, the coalescent has no simultaneous-collision part")]
    KingmanDegeneracy,
    #[error("mutation generator is not ergodic: no unique invariant distribution")]
    NonErgodicMutation,
    #[error("infinite-activity jump measure requires a truncation level")]
    TruncationRequired,
    #[error("time step violates stability bound: dt = {dt}, bound = {bound}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;
