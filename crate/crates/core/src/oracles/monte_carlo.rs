use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{psd_factor, van_loan_discretize};
use crate::error::{Error, Result};
use crate::linalg::{check_hurwitz, solve_lyapunov, Matrix};
use crate::metrics::PointingCovariances;
use crate::model::StateSpace;

/// Sample means of `p̄p̄ᵀ`, `s̄s̄ᵀ`, the time averages of `ppᵀ` and `ψψᵀ`, and their
/// standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub est_a: Matrix,
    pub est_d: Matrix,
    pub est_s: Matrix,
    pub est_j: Matrix,
    pub stderr_a: Matrix,
    pub stderr_d: Matrix,
    pub stderr_s: Matrix,
    pub stderr_j: Matrix,
    pub n_trials: usize,
    pub seed: u64,
    pub exposure: f64,
    pub step: f64,
}

/// Entrywise `(estimate − analytic)/stderr` for each covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub a: Matrix,
    pub d: Matrix,
    pub s: Matrix,
    pub j: Matrix,
}

impl ZScores {
    pub fn max_abs(&self) -> f64 {
        [&self.a, &self.d, &self.s, &self.j]
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0, |acc: f64, z| acc.max(z.abs()))
    }
}

fn z_matrix(est: &Matrix, se: &Matrix, exact: &Matrix) -> Matrix {
    Matrix::from_fn(est.nrows(), est.ncols(), |i, j| {
        let diff = est[(i, j)] - exact[(i, j)];
        if se[(i, j)] > 0.0 {
            diff / se[(i, j)]
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    })
}

impl MonteCarloReport {
    pub fn z_scores(&self, analytic: &PointingCovariances) -> ZScores {
        ZScores {
            a: z_matrix(&self.est_a, &self.stderr_a, &analytic.sigma_a),
            d: z_matrix(&self.est_d, &self.stderr_d, &analytic.sigma_d),
            s: z_matrix(&self.est_s, &self.stderr_s, &analytic.sigma_s),
            j: z_matrix(&self.est_j, &self.stderr_j, &analytic.sigma_j),
        }
    }

    /// `est_A − est_D − est_S/12 − est_J`.
    pub fn balance_defect(&self) -> Matrix {
        &self.est_a - &self.est_d - &self.est_s / 12.0 - &self.est_j
    }
}

fn pairwise_sum(items: &[Matrix]) -> Matrix {
    match items.len() {
        0 => unreachable!("at least two trials"),
        1 => items[0].clone(),
        n => pairwise_sum(&items[..n / 2]) + pairwise_sum(&items[n / 2..]),
    }
}

/// Mean and standard error of the mean, entrywise.
fn mean_and_stderr(samples: &[Matrix]) -> (Matrix, Matrix) {
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    let sq: Vec<Matrix> = samples.iter().map(|s| (s - &mean).map(|v| v * v)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, var.map(|v| (v / n).sqrt()))
}

/// Trapezoid weights on `n + 1` equally spaced samples.
fn trap_weight(k: usize, n: usize, h: f64) -> f64 {
    if k == 0 || k == n {
        0.5 * h
    } else {
        h
    }
}

/// Simulates `n_trials` exposures of length `T`, sampled every `h`, from stationary
/// initial conditions. Trial `i` draws from the ChaCha8 stream `i` of `seed`, so the
/// report does not depend on thread scheduling.
pub fn monte_carlo_metrics(
    sys: &StateSpace,
    exposure: f64,
    step: f64,
    n_trials: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    sys.ensure_strictly_proper()?;
    if n_trials < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 trials, got {n_trials}"
        )));
    }
    if !(exposure.is_finite() && exposure > 0.0 && step.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(
            "exposure and step must be positive".into(),
        ));
    }
    let ratio = exposure / step;
    let n_steps = ratio.round();
    if n_steps < 1.0 || (ratio - n_steps).abs() > 1e-9 * ratio {
        return Err(Error::InvalidInput(format!(
            "step {step} does not divide exposure {exposure}"
        )));
    }
    let n_steps = n_steps as usize;
    let h = exposure / n_steps as f64;

    let nx = sys.n_states();
    let p = if nx == 0 {
        Matrix::zeros(0, 0)
    } else {
        check_hurwitz(sys.a())?;
        solve_lyapunov(sys.a(), &(sys.b() * sys.b().transpose()))?
    };
    let p_factor = psd_factor(&p);
    let disc = van_loan_discretize(sys, h)?;
    let q_factor = psd_factor(&disc.qd);
    let c = sys.c();
    let np = c.nrows();
    let t = exposure;

    let trials: Vec<[Matrix; 4]> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let mut normal = |n: usize| -> nalgebra::DVector<f64> {
                nalgebra::DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
            };
            let mut x = &p_factor * normal(nx);
            let mut ps = Vec::with_capacity(n_steps + 1);
            ps.push(c * &x);
            for _ in 0..n_steps {
                x = &disc.ad * &x + &q_factor * normal(nx);
                ps.push(c * &x);
            }
            let alpha = |k: usize| k as f64 * h - t / 2.0;
            let mut mean = nalgebra::DVector::zeros(np);
            let mut moment = nalgebra::DVector::zeros(np);
            let mut acc_a = Matrix::zeros(np, np);
            for (k, pk) in ps.iter().enumerate() {
                let w = trap_weight(k, n_steps, h);
                mean += pk * w;
                moment += pk * (w * alpha(k));
                acc_a += pk * pk.transpose() * w;
            }
            let p_bar = mean / t;
            let v_bar = moment * (12.0 / (t * t * t));
            let s_bar = &v_bar * t;
            let mut acc_j = Matrix::zeros(np, np);
            for (k, pk) in ps.iter().enumerate() {
                let psi = pk - &p_bar - &v_bar * alpha(k);
                acc_j += &psi * psi.transpose() * trap_weight(k, n_steps, h);
            }
            [
                acc_a / t,
                &p_bar * p_bar.transpose(),
                &s_bar * s_bar.transpose(),
                acc_j / t,
            ]
        })
        .collect();

    let column = |i: usize| -> Vec<Matrix> { trials.iter().map(|r| r[i].clone()).collect() };
    let (est_a, stderr_a) = mean_and_stderr(&column(0));
    let (est_d, stderr_d) = mean_and_stderr(&column(1));
    let (est_s, stderr_s) = mean_and_stderr(&column(2));
    let (est_j, stderr_j) = mean_and_stderr(&column(3));
    Ok(MonteCarloReport {
        est_a,
        est_d,
        est_s,
        est_j,
        stderr_a,
        stderr_d,
        stderr_s,
        stderr_j,
        n_trials,
        seed,
        exposure,
        step: h,
    })
}
