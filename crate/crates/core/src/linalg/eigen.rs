use num_complex::Complex64;

use super::{ensure_finite, ensure_square, Matrix};
use crate::error::{Error, Result};

/// Eigenvalues of a square real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalue with the largest real part.
    pub fn rightmost(&self) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re))
    }

    pub fn max_real_part(&self) -> f64 {
        self.rightmost().map_or(f64::NEG_INFINITY, |l| l.re)
    }

    pub fn sum(&self) -> Complex64 {
        self.eigenvalues.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.eigenvalues.iter().product()
    }

    /// The pair `(λ_i, λ_j)`, `i ≤ j`, whose sum has the smallest modulus.
    pub fn closest_pair_sum_to_zero(&self) -> Option<Complex64> {
        let mut best: Option<Complex64> = None;
        for (i, a) in self.eigenvalues.iter().enumerate() {
            for b in &self.eigenvalues[i..] {
                let s = a + b;
                if best.is_none_or(|cur| s.norm() < cur.norm()) {
                    best = Some(s);
                }
            }
        }
        best
    }

    /// Eigenvalues sorted by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }
}

/// All eigenvalues of `a` via Hessenberg reduction and shifted QR (real Schur form).
pub fn eigenvalues(a: &Matrix) -> Result<Spectrum> {
    ensure_square(a, "eigenvalue argument")?;
    ensure_finite(a, "eigenvalue argument")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
        });
    }
    let balanced = balance(a);
    // The deflation test is strict at machine precision; widely scaled matrices
    // (interconnections mixing 1e5 and 1e-5 entries) may need a slightly looser one.
    let schur = [f64::EPSILON, 1e-15, 1e-14, 1e-13, 1e-12]
        .iter()
        .find_map(|&eps| balanced.clone().try_schur(eps, 200 * n.max(10)))
        .ok_or_else(|| Error::Convergence(format!("QR iteration on a {n}x{n} matrix")))?;
    Ok(Spectrum {
        eigenvalues: schur.complex_eigenvalues().iter().copied().collect(),
    })
}

/// Diagonal similarity `D⁻¹ A D` with power-of-two entries that evens out row and
/// column norms (Parlett-Reinsch). Exact in floating point; helps QR converge on
/// badly scaled interconnections.
fn balance(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut b = a.clone();
    let radix = 2.0f64;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut c2, mut r2) = (c, r);
            while c2 < r2 / radix {
                c2 *= radix;
                r2 /= radix;
                f *= radix;
            }
            while c2 >= r2 * radix {
                c2 /= radix;
                r2 *= radix;
                f /= radix;
            }
            if (c2 + r2) < 0.95 * s {
                done = false;
                for j in 0..n {
                    b[(i, j)] /= f;
                }
                for j in 0..n {
                    b[(j, i)] *= f;
                }
            }
        }
        if done {
            return b;
        }
    }
}

/// Stability margin `1e-9 · max(1, ‖A‖_F)`: `A` is Hurwitz when every eigenvalue has
/// real part below its negative.
pub fn stability_margin(a: &Matrix) -> f64 {
    1e-9 * a.norm().max(1.0)
}

/// Returns the spectrum of `a` if it is Hurwitz, otherwise the offending eigenvalue.
pub fn check_hurwitz(a: &Matrix) -> Result<Spectrum> {
    let spec = eigenvalues(a)?;
    let margin = stability_margin(a);
    if let Some(l) = spec.rightmost() {
        if l.re >= -margin {
            return Err(Error::Unstable {
                eigenvalue: l,
                margin,
            });
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_eigenvalues() {
        let a = Matrix::from_diagonal(&nalgebra::dvector![-1.0, -3.0]);
        let s = eigenvalues(&a).unwrap().sorted();
        assert_relative_eq!(s[0].re, -3.0, epsilon = 1e-14);
        assert_relative_eq!(s[1].re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn lightly_damped_oscillator() {
        let (w, z) = (10.0, 0.07);
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -w * w, -2.0 * z * w]);
        let s = eigenvalues(&a).unwrap();
        for l in &s.eigenvalues {
            assert_relative_eq!(l.re, -0.7, epsilon = 1e-12);
            assert_relative_eq!(l.norm(), 10.0, epsilon = 1e-12);
        }
        assert_relative_eq!(s.eigenvalues[0].im, -s.eigenvalues[1].im, epsilon = 1e-12);
    }

    #[test]
    fn companion_matrix_roots() {
        // (s+1)(s+2)(s+3) = s^3 + 6 s^2 + 11 s + 6
        let a = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -6.0, -11.0, -6.0]);
        let s = eigenvalues(&a).unwrap().sorted();
        for (l, want) in s.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((l - Complex64::new(want, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn integrator_is_not_hurwitz() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -1.0]);
        match check_hurwitz(&a) {
            Err(Error::Unstable { eigenvalue, .. }) => assert!(eigenvalue.re.abs() < 1e-12),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn empty_matrix_has_empty_spectrum() {
        assert!(eigenvalues(&Matrix::zeros(0, 0)).unwrap().is_empty());
    }
}
