//! Transfer-function building blocks, realized in controllable canonical form.

use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn positive(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

fn finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite")))
    }
}

impl StateSpace {
    /// `k ω_n² / (s² + 2 ζ ω_n s + ω_n²)`.
    pub fn second_order(k: f64, omega_n: f64, zeta: f64) -> Result<Self> {
        positive(omega_n, "natural frequency")?;
        finite(&[k, zeta], "second-order gain and damping")?;
        if zeta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "damping ratio {zeta} is negative"
            )));
        }
        let w2 = omega_n * omega_n;
        Self::strictly_proper(
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -w2, -2.0 * zeta * omega_n]),
            Matrix::from_column_slice(2, 1, &[0.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[k * w2, 0.0]),
        )
    }

    /// `k ω_c / (s + ω_c)`.
    pub fn first_order(k: f64, omega_c: f64) -> Result<Self> {
        positive(omega_c, "corner frequency")?;
        finite(&[k], "first-order gain")?;
        Self::strictly_proper(
            Matrix::from_element(1, 1, -omega_c),
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, k * omega_c),
        )
    }

    /// `(b2 s² + b1 s + b0) / (a2 s² + a1 s + a0)`; the denominator is normalized to
    /// be monic.
    pub fn biquad(num: [f64; 3], den: [f64; 3]) -> Result<Self> {
        finite(&num, "biquad numerator")?;
        finite(&den, "biquad denominator")?;
        if den[0] == 0.0 {
            return Err(Error::InvalidInput(
                "biquad denominator must be quadratic".into(),
            ));
        }
        let [b2, b1, b0] = num.map(|v| v / den[0]);
        let [_, a1, a0] = den.map(|v| v / den[0]);
        Self::new(
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -a0, -a1]),
            Matrix::from_column_slice(2, 1, &[0.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[b0 - b2 * a0, b1 - b2 * a1]),
            Matrix::from_element(1, 1, b2),
        )
    }

    /// PD controller with smoothed derivative, `k_P + k_D s / (T_K s + 1)`.
    pub fn pd_controller(k_p: f64, k_d: f64, t_k: f64) -> Result<Self> {
        positive(t_k, "derivative time constant")?;
        finite(&[k_p, k_d], "PD gains")?;
        Self::new(
            Matrix::from_element(1, 1, -1.0 / t_k),
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, -k_d / (t_k * t_k)),
            Matrix::from_element(1, 1, k_p + k_d / t_k),
        )
    }
}
