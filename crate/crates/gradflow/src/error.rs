//! Error taxonomy shared by every module.
//!
//! The CLI maps these onto process exit codes: configuration and argument
//! problems exit 1, divergence exits 2, saddle/evidence refusals exit 3.
//! Gradient-check failures are reported as data, not as errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions of two objects that must compose do not match.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A caller passed a value outside the documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A precondition of an operation was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration file failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// A trajectory left the representable range.
    #[error("divergence at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    /// A dense Hessian solve was refused because the matrix is singular.
    #[error("singular hessian: {0}")]
    SingularHessian(String),

    /// The curvature at a candidate minimum has non-positive directions, so
    /// a Gaussian (Laplace) approximation of the evidence is meaningless.
    #[error("saddle point: {0}")]
    Saddle(String),

    /// An iterative minimizer exhausted its step budget.
    #[error("no convergence within {steps} iterations: gradient norm {grad_norm:.3e}")]
    Convergence { steps: usize, grad_norm: f64 },

    /// A numerical procedure failed to produce a finite, stable result.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
