use thiserror::Error;

/// Errors shared by the fitting, sampling and oracle routines.
#[derive(Debug, Error)]
pub enum VbError {
    /// Input shapes are inconsistent with the model dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A symmetric positive-definite solve failed. The kernel systems
    /// `ν_p⁻²I + XᵀX` and `I + ν_p²XXᵀ` are positive definite by
    /// construction, so this signals corrupted input rather than a
    /// condition that jitter should paper over.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// Invalid argument values (non-finite entries, empty input, bad flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The desk-scale oracle was asked to run beyond its size policy.
    #[error("scale policy exceeded: {0}")]
    ScalePolicyExceeded(String),

    /// An iterative solver stalled before reaching its residual target.
    #[error("did not converge: {0}")]
    NonConvergence(String),
}

impl VbError {
    pub fn dims(msg: impl Into<String>) -> Self {
        VbError::DimensionMismatch(msg.into())
    }
}
