use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Solves `A X = B` for complex matrices by LU with partial pivoting.
pub fn solve_complex_linear(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!(
            "coefficient matrix must be square, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if b.nrows() != n {
        return Err(Error::Shape(format!(
            "right-hand side has {} rows, expected {n}",
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, b.ncols()));
    }
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = u
        .diagonal()
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    if scale == 0.0 || min_pivot <= n as f64 * f64::EPSILON * scale {
        return Err(Error::Singular(format!(
            "complex system pivot {min_pivot:.3e} relative to scale {scale:.3e}"
        )));
    }
    lu.solve(b)
        .ok_or_else(|| Error::Singular("complex LU solve failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_returns_rhs() {
        let b = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64, j as f64 - 1.0));
        let x = solve_complex_linear(&ComplexMatrix::identity(3, 3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_inverse() {
        let a = ComplexMatrix::from_diagonal(&nalgebra::dvector![c(1.0, 1.0), c(2.0, 0.0)]);
        let x = solve_complex_linear(&a, &ComplexMatrix::identity(2, 2)).unwrap();
        assert!((x[(0, 0)] - c(1.0, 0.0) / c(1.0, 1.0)).norm() < 1e-15);
        assert!((x[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(x[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn random_well_conditioned_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let mut a = ComplexMatrix::from_fn(4, 4, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            for i in 0..4 {
                a[(i, i)] += c(4.0, 0.0);
            }
            let b = ComplexMatrix::from_fn(4, 3, |_, _| c(rng.random_range(-1.0..1.0), 0.5));
            let x = solve_complex_linear(&a, &b).unwrap();
            assert!((&a * &x - &b).norm() / b.norm() < 1e-12);
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)],
        );
        let err = solve_complex_linear(&a, &ComplexMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }
}
