use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("factorisation failed: {0}")]
    Factorization(String),

    #[error("truncation too small: tail probability {tail:.3e} exceeds {limit:.0e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("degenerate normalisation: {0}")]
    DegenerateNormalization(String),

    #[error("degenerate conditioning: variance of {0} is zero")]
    DegenerateConditioning(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("measured value {measured} is below the model floor {floor}")]
    Inconsistency { measured: f64, floor: f64 },

    #[error("gain profile is not unimodal; sampled (g, variance) = {samples:?}")]
    OptimizerAmbiguity { samples: Vec<(f64, f64)> },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("electronic-noise correction undefined: {0}")]
    CorrectionUndefined(String),
}
