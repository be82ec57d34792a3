//! Independent routes to the same covariances, used to cross-check [`crate::metrics`].
//!
//! * [`lde_integrate`] integrates the Lyapunov differential equation of the
//!   augmented system with a fixed-step explicit scheme.
//! * [`van_loan_discretize`] gives the exact zero-order sampled model of the noise
//!   driven state.
//! * [`monte_carlo_metrics`] simulates trajectories with that model and averages the
//!   displacement, smear and jitter of each one.

mod discretize;
mod lde;
mod monte_carlo;

pub use discretize::{van_loan_discretize, DiscreteModel};
pub use lde::{lde_integrate, lde_integrate_with, LdeScheme};
pub use monte_carlo::{monte_carlo_metrics, MonteCarloReport, ZScores};

use crate::linalg::{symmetrize, Matrix};

/// `S` with `S Sᵀ = X` for symmetric PSD `X`; tiny negative eigenvalues are dropped.
pub(crate) fn psd_factor(x: &Matrix) -> Matrix {
    let n = x.nrows();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let eig = symmetrize(x).symmetric_eigen();
    let mut f = eig.eigenvectors;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    f
}
