use num_complex::Complex64;

use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::{solve_complex_linear, ComplexMatrix};

/// Sampled frequency response `G(jω) = C (jωI − A)⁻¹ B + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    /// Angular frequencies, rad/s.
    pub frequencies: Vec<f64>,
    pub gains: Vec<ComplexMatrix>,
}

impl FrequencyResponse {
    /// Magnitude in dB of channel `(output, input)` at every frequency.
    pub fn magnitude_db(&self, output: usize, input: usize) -> Vec<f64> {
        self.gains
            .iter()
            .map(|g| 20.0 * g[(output, input)].norm().log10())
            .collect()
    }
}

impl StateSpace {
    /// Frequency response on the given angular frequencies.
    pub fn freq_response(&self, omegas: &[f64]) -> Result<FrequencyResponse> {
        let gains = omegas
            .iter()
            .map(|&w| self.gain_at(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(FrequencyResponse {
            frequencies: omegas.to_vec(),
            gains,
        })
    }

    /// `G(jω)` at a single frequency.
    pub fn gain_at(&self, omega: f64) -> Result<ComplexMatrix> {
        if !omega.is_finite() {
            return Err(Error::InvalidInput(format!(
                "frequency {omega} is not finite"
            )));
        }
        let n = self.n_states();
        let to_c = |m: &crate::linalg::Matrix| m.map(|v| Complex64::new(v, 0.0));
        let d = to_c(self.d());
        if n == 0 {
            return Ok(d);
        }
        let mut shifted = -to_c(self.a());
        for i in 0..n {
            shifted[(i, i)] += Complex64::new(0.0, omega);
        }
        let x = solve_complex_linear(&shifted, &to_c(self.b())).map_err(|e| match e {
            Error::Singular(_) => Error::SingularFrequency { omega },
            other => other,
        })?;
        Ok(to_c(self.c()) * x + d)
    }
}
