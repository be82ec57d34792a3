//! Accuracy, displacement, smear and jitter covariances over a finite exposure.
//!
//! The finite-horizon covariance of `[x; z₁; z₂]`, with `ż₁ = p` and `ż₂ = z₁`,
//! started from the stationary state covariance `P`, is rewritten as the linear block
//! system `Ẋ = M X` (see [`build_block_m`]) whose solution at `T` is one matrix
//! exponential.
//!
//! Internally the exponential is taken of the time-normalized matrix: the blocks are
//! rescaled by powers of `T` so that every nonzero block except `A T` is an identity,
//! `C` or `P Cᵀ`. This is a diagonal similarity of `M T`, so the result is the same
//! matrix exponential, but tiny and huge exposures keep full relative precision in
//! the double-integrator blocks.

mod block;
mod closed_form;

pub use block::BlockLayout;
pub use closed_form::{first_order_closed_form, first_order_normalized};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{check_hurwitz, clip_psd, expm, solve_lyapunov, symmetrize, Matrix};
use crate::model::StateSpace;

/// Default PSD clipping tolerance, relative to `trace(Σ_A)`.
pub const DEFAULT_TOL_PSD: f64 = 1e-8;
/// Default balance-residual tolerance, relative to `‖Σ_A‖_F`.
pub const DEFAULT_TOL_BALANCE: f64 = 1e-8;

/// Exposure duration and numerical tolerances for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureConfig {
    /// Exposure duration `T`, seconds.
    pub exposure: f64,
    pub tol_psd: f64,
    pub tol_balance: f64,
}

impl ExposureConfig {
    pub fn new(exposure: f64) -> Result<Self> {
        Self::with_tolerances(exposure, DEFAULT_TOL_PSD, DEFAULT_TOL_BALANCE)
    }

    pub fn with_tolerances(exposure: f64, tol_psd: f64, tol_balance: f64) -> Result<Self> {
        let cfg = Self {
            exposure,
            tol_psd,
            tol_balance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exposure.is_finite() && self.exposure > 0.0) {
            return Err(Error::InvalidInput(format!(
                "exposure time must be positive and finite, got {}",
                self.exposure
            )));
        }
        for (name, v) in [("tol_psd", self.tol_psd), ("tol_balance", self.tol_balance)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Same tolerances, different exposure.
    pub fn at(&self, exposure: f64) -> Result<Self> {
        Self::with_tolerances(exposure, self.tol_psd, self.tol_balance)
    }
}

/// The four pointing covariances for one exposure time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointingCovariances {
    pub exposure: f64,
    pub sigma_a: Matrix,
    pub sigma_d: Matrix,
    pub sigma_s: Matrix,
    pub sigma_j: Matrix,
}

impl PointingCovariances {
    pub fn n_outputs(&self) -> usize {
        self.sigma_a.nrows()
    }

    /// `Σ_S/12`, the smear term as it enters the balance.
    pub fn smear_contribution(&self) -> Matrix {
        &self.sigma_s / 12.0
    }

    /// `‖Σ_A − Σ_D − Σ_S/12 − Σ_J‖_F / ‖Σ_A‖_F` (absolute when `Σ_A = 0`).
    pub fn balance_residual(&self) -> f64 {
        let r = (&self.sigma_a - &self.sigma_d - self.smear_contribution() - &self.sigma_j).norm();
        let scale = self.sigma_a.norm();
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    }

    /// `Σ_J + Σ_S/12`.
    pub fn smitter(&self) -> Matrix {
        smitter_covariance(self)
    }
}

/// Finite-horizon blocks at `t = T` together with the auxiliary variables.
///
/// `P̃_xx(T) = P` for a stationary start, so `p` is the steady-state covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSolution {
    pub p: Matrix,
    pub p_xz1: Matrix,
    pub p_xz2: Matrix,
    pub p_z1z1: Matrix,
    pub p_z1z2: Matrix,
    pub p_z2z2: Matrix,
    pub y_z1z1: Matrix,
    pub y_z1z2: Matrix,
    pub w_z1z2: Matrix,
    pub y_z2z2: Matrix,
}

impl AugmentedSolution {
    /// Builds the `P̃_z` blocks from the auxiliaries.
    pub fn from_auxiliaries(
        p: Matrix,
        p_xz1: Matrix,
        p_xz2: Matrix,
        y_z1z1: Matrix,
        y_z1z2: Matrix,
        w_z1z2: Matrix,
        y_z2z2: Matrix,
    ) -> Self {
        let p_z1z1 = &y_z1z1 + y_z1z1.transpose();
        let p_z1z2 = &y_z1z2 + y_z1z2.transpose() + &w_z1z2;
        let p_z2z2 = &y_z2z2 + y_z2z2.transpose();
        Self {
            p,
            p_xz1,
            p_xz2,
            p_z1z1,
            p_z1z2,
            p_z2z2,
            y_z1z1,
            y_z1z2,
            w_z1z2,
            y_z2z2,
        }
    }

    /// Largest relative violation of the three reconstruction identities.
    pub fn reconstruction_residual(&self) -> f64 {
        let rel = |a: &Matrix, b: Matrix| (a - &b).norm() / a.norm().max(f64::MIN_POSITIVE);
        let r11 = rel(&self.p_z1z1, &self.y_z1z1 + self.y_z1z1.transpose());
        let r12 = rel(
            &self.p_z1z2,
            &self.y_z1z2 + self.y_z1z2.transpose() + &self.w_z1z2,
        );
        let r22 = rel(&self.p_z2z2, &self.y_z2z2 + self.y_z2z2.transpose());
        r11.max(r12).max(r22)
    }

    /// `(Σ_D, Σ_S)` from the terminal `z` blocks, unrepaired.
    pub fn displacement_and_smear(&self, exposure: f64) -> (Matrix, Matrix) {
        let sigma_d = symmetrize(&self.p_z1z1) / (exposure * exposure);
        let np = self.p_z1z1.nrows();
        let mut pzz = Matrix::zeros(2 * np, 2 * np);
        pzz.view_mut((0, 0), (np, np)).copy_from(&self.p_z1z1);
        pzz.view_mut((0, np), (np, np)).copy_from(&self.p_z1z2);
        pzz.view_mut((np, 0), (np, np))
            .copy_from(&self.p_z1z2.transpose());
        pzz.view_mut((np, np), (np, np)).copy_from(&self.p_z2z2);
        let sigma_s = symmetrize(&SmearMap::new(np, exposure).apply(&pzz));
        (sigma_d, sigma_s)
    }
}

/// `L = [(6/T) I, (−12/T²) I]`, mapping `[z₁; z₂]` at the end of the exposure to the
/// smear.
#[derive(Debug, Clone, PartialEq)]
pub struct SmearMap {
    l: Matrix,
}

impl SmearMap {
    pub fn new(n_p: usize, exposure: f64) -> Self {
        let mut l = Matrix::zeros(n_p, 2 * n_p);
        for i in 0..n_p {
            l[(i, i)] = 6.0 / exposure;
            l[(i, n_p + i)] = -12.0 / (exposure * exposure);
        }
        Self { l }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.l
    }

    /// `L Π Lᵀ`.
    pub fn apply(&self, pzz: &Matrix) -> Matrix {
        &self.l * pzz * self.l.transpose()
    }
}

fn stationary_covariance(sys: &StateSpace) -> Result<Matrix> {
    sys.ensure_strictly_proper()?;
    let n = sys.n_states();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    check_hurwitz(sys.a())?;
    let q = sys.b() * sys.b().transpose();
    Ok(symmetrize(&solve_lyapunov(sys.a(), &q)?))
}

/// `Σ_A = C P Cᵀ` with `A P + P Aᵀ + B Bᵀ = 0`.
pub fn accuracy_covariance(sys: &StateSpace) -> Result<Matrix> {
    let p = stationary_covariance(sys)?;
    Ok(symmetrize(&(sys.c() * p * sys.c().transpose())))
}

/// The block matrix `M` of dimension `5 n_p + 2 n_x`, with `P` the stationary state
/// covariance. Block order is given by [`BlockLayout`].
pub fn build_block_m(sys: &StateSpace, p: &Matrix) -> Result<Matrix> {
    block::assemble_m(sys.a(), sys.c(), p)
}

/// Evaluates the pointing covariances of one model, caching `P` and `Σ_A`.
#[derive(Debug, Clone)]
pub struct PointingAnalyzer {
    a: Matrix,
    c: Matrix,
    p: Matrix,
    pct: Matrix,
    sigma_a: Matrix,
    work: Whitened,
}

/// The model in coordinates where the stationary covariance is the identity,
/// `x = L x_w` with `P = L Lᵀ`. There `A_w + A_wᵀ = −B_w B_wᵀ`, so `e^{A_w t}` is a
/// contraction and the exponential does not inherit a badly conditioned realization.
/// Falls back to the original coordinates when `P` is not positive definite.
#[derive(Debug, Clone)]
struct Whitened {
    a: Matrix,
    c: Matrix,
    p: Matrix,
    /// `L`, or `None` when no change of coordinates was made.
    l: Option<Matrix>,
}

impl Whitened {
    fn new(a: &Matrix, c: &Matrix, p: &Matrix) -> Self {
        let original = || Self {
            a: a.clone(),
            c: c.clone(),
            p: p.clone(),
            l: None,
        };
        let Some(chol) = p.clone().cholesky() else {
            return original();
        };
        let l = chol.l();
        let Some(a_w) = l.solve_lower_triangular(&(a * &l)) else {
            return original();
        };
        if a_w.iter().any(|v| !v.is_finite()) {
            return original();
        }
        let n = a.nrows();
        Self {
            a: a_w,
            c: c * &l,
            p: Matrix::identity(n, n),
            l: Some(l),
        }
    }

    /// Maps state rows back to the original coordinates.
    fn to_original(&self, rows: Matrix) -> Matrix {
        match &self.l {
            Some(l) => l * rows,
            None => rows,
        }
    }
}

impl PointingAnalyzer {
    pub fn new(sys: &StateSpace) -> Result<Self> {
        let p = stationary_covariance(sys)?;
        let pct = &p * sys.c().transpose();
        let sigma_a = symmetrize(&(sys.c() * &pct));
        let work = Whitened::new(sys.a(), sys.c(), &p);
        Ok(Self {
            a: sys.a().clone(),
            c: sys.c().clone(),
            p,
            pct,
            sigma_a,
            work,
        })
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(self.a.nrows(), self.c.nrows())
    }

    pub fn stationary_covariance(&self) -> &Matrix {
        &self.p
    }

    pub fn accuracy(&self) -> &Matrix {
        &self.sigma_a
    }

    /// `M` for this model.
    pub fn block_m(&self) -> Matrix {
        block::assemble_m(&self.a, &self.c, &self.p).expect("dimensions checked at construction")
    }

    /// The reduced displacement-only matrix, dimension `2 n_p + n_x`.
    pub fn reduced_block(&self) -> Matrix {
        block::assemble_reduced(&self.a, &self.c, &self.p)
            .expect("dimensions checked at construction")
    }

    fn check_exposure(exposure: f64) -> Result<()> {
        if exposure.is_finite() && exposure > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "exposure time must be positive and finite, got {exposure}"
            )))
        }
    }

    /// Terminal blocks `X(T)` in the normalized variables: `Y_z2z2/T⁴`, `W_z1z2/T³`,
    /// `P̃_xz2/T²`, `Y_z1z2/T³`, `Y_z1z1/T²`, `P̃_xz1/T`.
    fn normalized_terminal(&self, exposure: f64) -> Result<Matrix> {
        // Only A changes under the normalization; every other block is T-free.
        let layout = self.layout();
        let w = &self.work;
        let m = block::assemble_m(&(&w.a * exposure), &w.c, &w.p)?;
        Ok(expm(&m, 1.0)?.columns(layout.f(), layout.n_p).clone_owned())
    }

    /// Solves the block system at `T` and returns the unscaled augmented blocks.
    pub fn augmented(&self, exposure: f64) -> Result<AugmentedSolution> {
        Self::check_exposure(exposure)?;
        let x = self.normalized_terminal(exposure)?;
        let l = self.layout();
        let (nx, np) = (l.n_x, l.n_p);
        let t = exposure;
        let blk = |row: usize, rows: usize, scale: f64| x.rows(row, rows).clone_owned() * scale;
        let state = |row: usize, scale: f64| self.work.to_original(blk(row, nx, scale));
        Ok(AugmentedSolution::from_auxiliaries(
            self.p.clone(),
            state(l.p_xz1(), t),
            state(l.p_xz2(), t * t),
            blk(l.y_z1z1(), np, t * t),
            blk(l.y_z1z2(), np, t * t * t),
            blk(l.w_z1z2(), np, t * t * t),
            blk(l.y_z2z2(), np, t.powi(4)),
        ))
    }

    /// Σ_D and Σ_S from the normalized blocks, where the powers of `T` cancel.
    fn raw_displacement_smear(&self, x: &Matrix) -> (Matrix, Matrix) {
        let l = self.layout();
        let np = l.n_p;
        let sym2 = |m: Matrix| &m + m.transpose();
        let y11 = x.rows(l.y_z1z1(), np).clone_owned();
        let y12 = x.rows(l.y_z1z2(), np).clone_owned();
        let w12 = x.rows(l.w_z1z2(), np).clone_owned();
        let y22 = x.rows(l.y_z2z2(), np).clone_owned();
        let p11 = sym2(y11);
        let p12 = sym2(y12) + w12;
        let p22 = sym2(y22);
        let sigma_s = &p11 * 36.0 - (&p12 + p12.transpose()) * 72.0 + p22 * 144.0;
        (p11, symmetrize(&sigma_s))
    }

    /// Full pipeline at one exposure, returning the covariances and the blocks.
    pub fn evaluate(
        &self,
        cfg: &ExposureConfig,
    ) -> Result<(PointingCovariances, AugmentedSolution)> {
        let pc = self.covariances(cfg)?;
        let aug = self.augmented(cfg.exposure)?;
        Ok((pc, aug))
    }

    /// The four covariances at one exposure.
    pub fn covariances(&self, cfg: &ExposureConfig) -> Result<PointingCovariances> {
        cfg.validate()?;
        let x = self.normalized_terminal(cfg.exposure)?;
        let (sigma_d, sigma_s) = self.raw_displacement_smear(&x);
        let sigma_j = symmetrize(&(&self.sigma_a - &sigma_d - &sigma_s / 12.0));
        self.finish(cfg, sigma_d, sigma_s, sigma_j)
    }

    fn finish(
        &self,
        cfg: &ExposureConfig,
        sigma_d: Matrix,
        sigma_s: Matrix,
        sigma_j: Matrix,
    ) -> Result<PointingCovariances> {
        let floor = cfg.tol_psd * self.sigma_a.trace().max(0.0);
        let (sigma_d, _) = clip_psd(&sigma_d, floor, "displacement covariance")?;
        let (sigma_s, _) = clip_psd(&sigma_s, 12.0 * floor, "smear covariance")?;
        let (sigma_j, _) = clip_psd(&sigma_j, floor, "jitter covariance")?;
        let pc = PointingCovariances {
            exposure: cfg.exposure,
            sigma_a: self.sigma_a.clone(),
            sigma_d,
            sigma_s,
            sigma_j,
        };
        let residual = pc.balance_residual();
        if residual.is_nan() || residual > cfg.tol_balance {
            return Err(Error::Inconsistent(format!(
                "balance residual {residual:.3e} exceeds {:.3e} at T = {}",
                cfg.tol_balance, cfg.exposure
            )));
        }
        Ok(pc)
    }

    /// Σ_D alone from the reduced `(2 n_p + n_x)` system.
    pub fn displacement_fast(&self, exposure: f64) -> Result<Matrix> {
        Self::check_exposure(exposure)?;
        let np = self.c.nrows();
        let w = &self.work;
        let reduced = block::assemble_reduced(&(&w.a * exposure), &w.c, &w.p)?;
        let e = expm(&reduced, 1.0)?;
        let nx = self.a.nrows();
        let y11 = e.view((0, np + nx), (np, np)).clone_owned();
        Ok(symmetrize(&(&y11 + y11.transpose())))
    }

    /// Covariances at every exposure in `exposures`, evaluated in parallel.
    pub fn sweep(
        &self,
        exposures: &[f64],
        template: &ExposureConfig,
    ) -> Result<Vec<PointingCovariances>> {
        exposures
            .par_iter()
            .map(|&t| self.covariances(&template.at(t)?))
            .collect()
    }

    /// `P C^T`, the coupling block in `M`.
    pub fn coupling(&self) -> &Matrix {
        &self.pct
    }
}

/// One-shot evaluation of the four covariances and the augmented blocks.
pub fn pointing_covariances(
    sys: &StateSpace,
    cfg: &ExposureConfig,
) -> Result<(PointingCovariances, AugmentedSolution)> {
    PointingAnalyzer::new(sys)?.evaluate(cfg)
}

/// Σ_D through the reduced system only.
pub fn displacement_covariance_fast(sys: &StateSpace, cfg: &ExposureConfig) -> Result<Matrix> {
    cfg.validate()?;
    PointingAnalyzer::new(sys)?.displacement_fast(cfg.exposure)
}

/// `Σ_J + Σ_S/12`, equal to `Σ_A − Σ_D`.
pub fn smitter_covariance(pc: &PointingCovariances) -> Matrix {
    &pc.sigma_j + pc.smear_contribution()
}

/// Covariances for each exposure time, default tolerances.
pub fn exposure_sweep(sys: &StateSpace, exposures: &[f64]) -> Result<Vec<PointingCovariances>> {
    let analyzer = PointingAnalyzer::new(sys)?;
    let first = exposures.first().copied().unwrap_or(1.0);
    analyzer.sweep(exposures, &ExposureConfig::new(first)?)
}

/// `n` exposure times spaced logarithmically from `t_min` to `t_max` inclusive.
pub fn log_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || n < 2 {
        return Err(Error::InvalidInput(format!(
            "need 0 < min < max and at least 2 points, got [{t_min}, {t_max}] with {n}"
        )));
    }
    let (l0, l1) = (t_min.log10(), t_max.log10());
    Ok((0..n)
        .map(|k| {
            if k == 0 {
                t_min
            } else if k == n - 1 {
                t_max
            } else {
                10f64.powf(l0 + (l1 - l0) * k as f64 / (n - 1) as f64)
            }
        })
        .collect())
}
