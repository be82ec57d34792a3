use super::{eigenvalues, ensure_finite, ensure_square, symmetrize, Matrix, DEFAULT_TOL};
use crate::error::{Error, Result};

/// Solves `A P + P Aᵀ + Q = 0` for symmetric `P` with the default tolerance.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    solve_lyapunov_with_tol(a, q, DEFAULT_TOL)
}

/// Solves `A P + P Aᵀ + Q = 0` by vectorization.
///
/// Only the `n(n+1)/2` upper-triangular entries of `P` are unknowns, so the dense
/// system is the Kronecker sum `I⊗A + A⊗I` restricted to symmetric matrices. It is
/// nonsingular iff no two eigenvalues of `A` sum to zero. The residual must satisfy
/// `‖AP + PAᵀ + Q‖ ≤ tol·(‖A‖‖P‖ + ‖Q‖)`.
pub fn solve_lyapunov_with_tol(a: &Matrix, q: &Matrix, tol: f64) -> Result<Matrix> {
    ensure_square(a, "Lyapunov A")?;
    ensure_finite(a, "Lyapunov A")?;
    ensure_finite(q, "Lyapunov Q")?;
    let n = a.nrows();
    if q.shape() != (n, n) {
        return Err(Error::Shape(format!(
            "Lyapunov Q is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    let asym = (q - q.transpose()).norm();
    if asym > tol * q.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "Lyapunov Q is not symmetric (‖Q − Qᵀ‖ = {asym:.3e})"
        )));
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let spectrum = eigenvalues(a)?;
    if let Some(sum) = spectrum.closest_pair_sum_to_zero() {
        if sum.norm() <= tol * a.norm().max(1.0) {
            return Err(Error::Unsolvable { sum });
        }
    }

    let m = n * (n + 1) / 2;
    let index = |i: usize, j: usize| {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * n - r * (r + 1) / 2 + c
    };
    let pack = |q: &Matrix| {
        let mut rhs = Matrix::zeros(m, 1);
        for i in 0..n {
            for j in i..n {
                rhs[(index(i, j), 0)] = -0.5 * (q[(i, j)] + q[(j, i)]);
            }
        }
        rhs
    };
    let unpack = |x: &Matrix| {
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = x[(index(i, j), 0)];
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
        }
        p
    };
    let mut kron = Matrix::zeros(m, m);
    for i in 0..n {
        for j in i..n {
            let row = index(i, j);
            for k in 0..n {
                kron[(row, index(k, j))] += a[(i, k)];
                kron[(row, index(i, k))] += a[(j, k)];
            }
        }
    }

    let lu = kron.lu();
    let singular = || Error::Singular("vectorized Lyapunov system".into());
    let mut p = unpack(&lu.solve(&pack(q)).ok_or_else(singular)?);
    // Refinement against a compensated residual. Helps when A is far from normal,
    // where the f64 residual is too noisy to improve P.
    let mut last = f64::INFINITY;
    for _ in 0..4 {
        let r = compensated_residual(a, &p, q);
        let dp = unpack(&lu.solve(&pack(&r)).ok_or_else(singular)?);
        let size = dp.norm();
        if size.is_nan() || size >= last {
            break;
        }
        p += dp;
        last = size;
        if size <= f64::EPSILON * p.norm() {
            break;
        }
    }

    let p = symmetrize(&p);
    let residual = (a * &p + &p * a.transpose() + q).norm();
    let bound = tol * (a.norm() * p.norm() + q.norm());
    if residual > bound {
        return Err(Error::Inconsistent(format!(
            "Lyapunov residual {residual:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(p)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `A P + P Aᵀ + Q` with error-free transformations, about twice working precision.
fn compensated_residual(a: &Matrix, p: &Matrix, q: &Matrix) -> Matrix {
    let n = a.nrows();
    Matrix::from_fn(n, n, |i, j| {
        let (mut s, mut err) = (0.5 * (q[(i, j)] + q[(j, i)]), 0.0);
        for k in 0..n {
            for (x, y) in [(a[(i, k)], p[(k, j)]), (p[(i, k)], a[(j, k)])] {
                let prod = x * y;
                let (sum, e) = two_sum(s, prod);
                s = sum;
                err += x.mul_add(y, -prod) + e;
            }
        }
        s + err
    })
}
