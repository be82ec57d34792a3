use crate::error::{Error, Result};
use crate::linalg::{expm, symmetrize, Matrix};
use crate::model::StateSpace;

/// Exact sampled model `x_{k+1} = A_d x_k + w_k`, `w_k ~ N(0, Q_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub ad: Matrix,
    pub qd: Matrix,
    pub step: f64,
}

/// `A_d = e^{Ah}` and `Q_d = ∫₀ʰ e^{Aτ} B Bᵀ e^{Aᵀτ} dτ` from one exponential of
/// `[[−A, B Bᵀ], [0, Aᵀ]] h`.
pub fn van_loan_discretize(sys: &StateSpace, step: f64) -> Result<DiscreteModel> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    let n = sys.n_states();
    let a = sys.a();
    let mut g = Matrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&(-a));
    g.view_mut((0, n), (n, n))
        .copy_from(&(sys.b() * sys.b().transpose()));
    g.view_mut((n, n), (n, n)).copy_from(&a.transpose());
    let e = expm(&g, step)?;
    let ad = e.view((n, n), (n, n)).transpose();
    let qd = symmetrize(&(&ad * e.view((0, n), (n, n))));
    Ok(DiscreteModel { ad, qd, step })
}
