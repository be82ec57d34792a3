//! Closed forms for the scalar process `ẋ = a x + b u`, `p = x`.

use super::PointingCovariances;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use num_complex::Complex64;

/// Covariances normalized by `P = −b²/(2a)` as functions of `x = aT < 0`:
/// `(Σ_D/P, Σ_S/P, Σ_J/P)`.
///
/// Uses power series for `|x| < 2`, where the closed forms lose digits to
/// cancellation (their numerators vanish to fourth order).
pub fn first_order_normalized(x: f64) -> (f64, f64, f64) {
    if x.abs() < 2.0 {
        series(x)
    } else {
        let e = x.exp();
        let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
        let d = 2.0 / x2 * (e - 1.0 - x);
        let s = 24.0 / x4 * (12.0 * (x * e + 1.0 - e) - 3.0 * x2 * (1.0 + e) - x3);
        let j = (24.0 * (e - 1.0 - x * e) + 4.0 * x2 * (2.0 + e) + 4.0 * x3 + x4) / x4;
        (d, s, j)
    }
}

// Σ_D/P = 2 Σ_{m≥2} x^{m−2}/m!
// Σ_S/P = −72 Σ_{m≥5} (m−1)(m−4) x^{m−4}/m!
// Σ_J/P = 4 Σ_{m≥5} (m−1)(m−6) x^{m−4}/m!
fn series(x: f64) -> (f64, f64, f64) {
    let (mut d, mut s, mut j) = (0.0, 0.0, 0.0);
    let mut inv_fact = 0.5; // 1/m!
    let mut pow2 = 1.0; // x^{m-2}
    let mut pow4 = 1.0 / x.abs().max(f64::MIN_POSITIVE); // placeholder until m = 4
    for m in 2..64u32 {
        let mf = f64::from(m);
        d += 2.0 * pow2 * inv_fact;
        if m == 4 {
            pow4 = 1.0;
        }
        if m >= 5 {
            let t = pow4 * inv_fact;
            s -= 72.0 * (mf - 1.0) * (mf - 4.0) * t;
            j += 4.0 * (mf - 1.0) * (mf - 6.0) * t;
            if (mf * mf * t).abs() < 1e-18 * (s.abs() + j.abs()) {
                break;
            }
        }
        inv_fact /= mf + 1.0;
        pow2 *= x;
        pow4 *= x;
    }
    (d, s, j)
}

/// Evaluates the closed-form covariances for the first-order process.
pub fn first_order_closed_form(a: f64, b: f64, exposure: f64) -> Result<PointingCovariances> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(
            "first-order parameters must be finite".into(),
        ));
    }
    if a >= 0.0 {
        return Err(Error::Unstable {
            eigenvalue: Complex64::new(a, 0.0),
            margin: 0.0,
        });
    }
    if !(exposure.is_finite() && exposure > 0.0) {
        return Err(Error::InvalidInput(format!(
            "exposure {exposure} must be positive"
        )));
    }
    let p = -b * b / (2.0 * a);
    let (d, s, j) = first_order_normalized(a * exposure);
    let scalar = |v: f64| Matrix::from_element(1, 1, v);
    Ok(PointingCovariances {
        exposure,
        sigma_a: scalar(p),
        sigma_d: scalar(p * d),
        sigma_s: scalar(p * s),
        sigma_j: scalar(p * j),
    })
}
