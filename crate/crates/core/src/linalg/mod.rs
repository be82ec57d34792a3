//! Dense linear-algebra kernels used throughout the crate.

mod complex;
mod eigen;
mod expm;
mod lyapunov;

pub use complex::solve_complex_linear;
pub use eigen::{check_hurwitz, eigenvalues, stability_margin, Spectrum};
pub use expm::expm;
pub use lyapunov::{solve_lyapunov, solve_lyapunov_with_tol};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense real matrix; the carrier for every matrix quantity in the crate.
pub type Matrix = DMatrix<f64>;

/// Dense complex matrix, used for frequency responses.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Default relative tolerance for residual checks.
pub const DEFAULT_TOL: f64 = 1e-10;

pub(crate) fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// `(X + Xᵀ)/2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `m`, or 0 for an empty matrix.
pub fn min_sym_eigenvalue(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Projects a nearly-PSD symmetric matrix onto the PSD cone.
///
/// Eigenvalues in `(-floor, 0)` are set to zero; anything below `-floor` is an
/// error. Returns the repaired matrix and the magnitude of the most negative
/// eigenvalue that was removed (0 when nothing was clipped).
pub fn clip_psd(m: &Matrix, floor: f64, what: &str) -> Result<(Matrix, f64)> {
    let sym = symmetrize(m);
    if sym.is_empty() {
        return Ok((sym, 0.0));
    }
    let eig = sym.clone().symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return Ok((sym, 0.0));
    }
    if min < -floor {
        return Err(Error::Inconsistent(format!(
            "{what} has eigenvalue {min:.6e} below the PSD floor -{floor:.3e}"
        )));
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let repaired =
        &eig.eigenvectors * Matrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    Ok((symmetrize(&repaired), -min))
}
