use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: non-finite entries, wrong lengths, bad parameters.
    #[error("invalid input: {0}")]
    Input(String),

    /// Operand shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix expected to be symmetric is not.
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    /// A matrix expected to be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    /// Range inclusion R(U) ⊆ R(V) fails; carries the residual ‖VV†U − U‖.
    #[error("range inclusion fails (residual {residual:.3e})")]
    Range { residual: f64 },

    /// A documented precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Perturbation parameters violate max(λ₁ + μ/√A, λ₂) < 1.
    #[error("inadmissible perturbation parameters: {0}")]
    Inadmissible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
