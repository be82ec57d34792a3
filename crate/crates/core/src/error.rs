use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the numerical kernels, model algebra and covariance pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    #[error("Lyapunov equation not solvable: eigenvalue pair sums to {sum} (|sum| = {:.3e})", sum.norm())]
    Unsolvable { sum: Complex64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("frequency response singular at omega = {omega} rad/s")]
    SingularFrequency { omega: f64 },

    #[error("eigenvalue iteration did not converge: {0}")]
    Convergence(String),

    #[error("system is not asymptotically stable: eigenvalue {eigenvalue} has real part above -{margin:.3e}")]
    Unstable { eigenvalue: Complex64, margin: f64 },

    #[error("nonzero feedthrough D from noise input to output (max |D| = {max_abs:.3e}); white noise through D has unbounded variance")]
    Feedthrough { max_abs: f64 },

    #[error("ill-posed interconnection: |det(I - sign*D_fb*D_plant)| = {det:.3e}")]
    IllPosed { det: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
