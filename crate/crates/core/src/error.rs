use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Operand dimensions or factor layouts do not agree.
    #[error("shape error: {0}")]
    Shape(String),
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input is degenerate (for example a zero vector).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A vector or coefficient list is not normalized.
    #[error("normalization error: {0}")]
    Normalization(String),
    /// A matrix is not a density matrix (not Hermitian, not PSD, or trace != 1).
    #[error("not a density matrix: {0}")]
    DensityMatrix(String),
    /// A state that should be classical has off-diagonal entries.
    #[error("state is not classical: {0}")]
    NotClassical(String),
    /// The state has fewer than two nonzero Schmidt coefficients.
    #[error("state is not entangled: {0}")]
    NotEntangled(String),
    /// The input is not a valid state or effect of the theory.
    #[error("validity error: {0}")]
    Validity(String),
    /// The total dimension exceeds the dense-engine cap.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
