use crate::error::{Error, Result};
use crate::linalg::{check_hurwitz, solve_lyapunov, symmetrize, Matrix};
use crate::metrics::AugmentedSolution;
use crate::model::StateSpace;

/// Fixed-step scheme for [`lde_integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LdeScheme {
    /// Classical fourth-order Runge-Kutta.
    #[default]
    Rk4,
    /// Explicit trapezoidal rule (Heun), second order.
    Trapezoidal,
}

/// Covariance of `[x; z₁; z₂]` plus the auxiliaries whose symmetric parts give the
/// `z` blocks.
#[derive(Debug, Clone)]
struct State {
    pt: Matrix,
    y11: Matrix,
    y12: Matrix,
    w12: Matrix,
    y22: Matrix,
}

impl State {
    fn axpy(&self, h: f64, d: &State) -> State {
        State {
            pt: &self.pt + &d.pt * h,
            y11: &self.y11 + &d.y11 * h,
            y12: &self.y12 + &d.y12 * h,
            w12: &self.w12 + &d.w12 * h,
            y22: &self.y22 + &d.y22 * h,
        }
    }
}

struct Rhs {
    at: Matrix,
    qt: Matrix,
    c: Matrix,
    nx: usize,
    np: usize,
}

impl Rhs {
    fn eval(&self, s: &State) -> State {
        let (nx, np) = (self.nx, self.np);
        let ap = &self.at * &s.pt;
        let pt = &ap + ap.transpose() + &self.qt;
        let p_xz1 = s.pt.view((0, nx), (nx, np));
        let p_xz2 = s.pt.view((0, nx + np), (nx, np));
        State {
            pt,
            y11: &self.c * p_xz1,
            y12: s.y11.clone(),
            w12: &self.c * p_xz2,
            y22: &s.w12 + &s.y12 * 2.0,
        }
    }
}

/// Integrates the augmented Lyapunov differential equation from a stationary start
/// with `n_steps` RK4 steps.
pub fn lde_integrate(sys: &StateSpace, exposure: f64, n_steps: usize) -> Result<AugmentedSolution> {
    lde_integrate_with(sys, exposure, n_steps, LdeScheme::Rk4).map(|(s, _)| s)
}

/// As [`lde_integrate`] with an explicit scheme. Also returns the largest relative
/// drift of `P̃_xx` away from `P` over all steps.
pub fn lde_integrate_with(
    sys: &StateSpace,
    exposure: f64,
    n_steps: usize,
    scheme: LdeScheme,
) -> Result<(AugmentedSolution, f64)> {
    sys.ensure_strictly_proper()?;
    if n_steps < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 steps, got {n_steps}"
        )));
    }
    if !(exposure.is_finite() && exposure > 0.0) {
        return Err(Error::InvalidInput(format!(
            "exposure must be positive, got {exposure}"
        )));
    }
    let (nx, np) = (sys.n_states(), sys.n_outputs());
    let p = if nx == 0 {
        Matrix::zeros(0, 0)
    } else {
        check_hurwitz(sys.a())?;
        symmetrize(&solve_lyapunov(sys.a(), &(sys.b() * sys.b().transpose()))?)
    };

    let n = nx + 2 * np;
    let mut at = Matrix::zeros(n, n);
    at.view_mut((0, 0), (nx, nx)).copy_from(sys.a());
    at.view_mut((nx, 0), (np, nx)).copy_from(sys.c());
    at.view_mut((nx + np, nx), (np, np)).fill_with_identity();
    let mut qt = Matrix::zeros(n, n);
    qt.view_mut((0, 0), (nx, nx))
        .copy_from(&(sys.b() * sys.b().transpose()));
    let rhs = Rhs {
        at,
        qt,
        c: sys.c().clone(),
        nx,
        np,
    };

    let mut pt0 = Matrix::zeros(n, n);
    pt0.view_mut((0, 0), (nx, nx)).copy_from(&p);
    let zero = Matrix::zeros(np, np);
    let mut s = State {
        pt: pt0,
        y11: zero.clone(),
        y12: zero.clone(),
        w12: zero.clone(),
        y22: zero,
    };

    let h = exposure / n_steps as f64;
    let p_norm = p.norm().max(f64::MIN_POSITIVE);
    let mut drift: f64 = 0.0;
    for _ in 0..n_steps {
        s = match scheme {
            LdeScheme::Rk4 => {
                let k1 = rhs.eval(&s);
                let k2 = rhs.eval(&s.axpy(h / 2.0, &k1));
                let k3 = rhs.eval(&s.axpy(h / 2.0, &k2));
                let k4 = rhs.eval(&s.axpy(h, &k3));
                s.axpy(h / 6.0, &k1)
                    .axpy(h / 3.0, &k2)
                    .axpy(h / 3.0, &k3)
                    .axpy(h / 6.0, &k4)
            }
            LdeScheme::Trapezoidal => {
                let k1 = rhs.eval(&s);
                let k2 = rhs.eval(&s.axpy(h, &k1));
                s.axpy(h / 2.0, &k1).axpy(h / 2.0, &k2)
            }
        };
        let pxx = s.pt.view((0, 0), (nx, nx));
        drift = drift.max((pxx - &p).norm() / p_norm);
    }

    let blk = |r: usize, c: usize, rows: usize, cols: usize| {
        s.pt.view((r, c), (rows, cols)).clone_owned()
    };
    let sol = AugmentedSolution {
        p: blk(0, 0, nx, nx),
        p_xz1: blk(0, nx, nx, np),
        p_xz2: blk(0, nx + np, nx, np),
        p_z1z1: blk(nx, nx, np, np),
        p_z1z2: blk(nx, nx + np, np, np),
        p_z2z2: blk(nx + np, nx + np, np, np),
        y_z1z1: s.y11,
        y_z1z2: s.y12,
        w_z1z2: s.w12,
        y_z2z2: s.y22,
    };
    Ok((sol, drift))
}
