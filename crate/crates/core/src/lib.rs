//! Pointing error covariances for stable continuous-time LTI systems driven by
//! zero-mean white noise.
//!
//! Given a realization `(A, B, C)` with output `p = C x`, the crate computes for an
//! exposure of duration `T`:
//!
//! * the accuracy covariance `Σ_A = C P Cᵀ` from the algebraic Lyapunov equation,
//! * the displacement covariance `Σ_D` of the exposure-mean position,
//! * the smear covariance `Σ_S` of the least-squares linear trend across the exposure,
//! * the jitter covariance `Σ_J = Σ_A − Σ_D − Σ_S/12` of the residual motion.
//!
//! Displacement and smear come from the finite-horizon covariance of the system
//! augmented with a double integrator on `p`. That Lyapunov differential equation is
//! rewritten as a linear block system `Ẋ = M X` and solved exactly with one matrix
//! exponential (see [`metrics`]).
//!
//! Independent checks live in [`oracles`]: direct integration of the block ODEs,
//! exact stochastic discretization and Monte Carlo estimation.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod model_file;
pub mod oracles;
pub mod scenarios;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Matrix, Spectrum};
pub use metrics::{
    accuracy_covariance, build_block_m, displacement_covariance_fast, exposure_sweep,
    first_order_closed_form, pointing_covariances, smitter_covariance, AugmentedSolution,
    ExposureConfig, PointingAnalyzer, PointingCovariances, SmearMap,
};
pub use model::{FrequencyResponse, StateSpace};
