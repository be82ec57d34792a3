//! Block-diagram algebra on state-space models.

use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn place(target: &mut Matrix, row: usize, col: usize, block: &Matrix) {
    if block.is_empty() {
        return;
    }
    target.view_mut((row, col), block.shape()).copy_from(block);
}

impl StateSpace {
    /// Cascade: `self` feeds `second`, i.e. `G = G₂ G₁`.
    pub fn series(&self, second: &StateSpace) -> Result<StateSpace> {
        if self.n_outputs() != second.n_inputs() {
            return Err(Error::Shape(format!(
                "series: first has {} outputs, second has {} inputs",
                self.n_outputs(),
                second.n_inputs()
            )));
        }
        let (n1, n2) = (self.n_states(), second.n_states());
        let mut a = Matrix::zeros(n1 + n2, n1 + n2);
        place(&mut a, 0, 0, self.a());
        place(&mut a, n1, 0, &(second.b() * self.c()));
        place(&mut a, n1, n1, second.a());
        let mut b = Matrix::zeros(n1 + n2, self.n_inputs());
        place(&mut b, 0, 0, self.b());
        place(&mut b, n1, 0, &(second.b() * self.d()));
        let mut c = Matrix::zeros(second.n_outputs(), n1 + n2);
        place(&mut c, 0, 0, &(second.d() * self.c()));
        place(&mut c, 0, n1, second.c());
        StateSpace::new(a, b, c, second.d() * self.d())
    }

    /// Closes a loop around `self` through `feedback`: `u = r + sign · H y`.
    ///
    /// `sign = -1` is negative feedback. The result maps `r` to `y` and keeps both
    /// state vectors (plant first).
    pub fn feedback(&self, feedback: &StateSpace, sign: f64) -> Result<StateSpace> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidInput(format!(
                "feedback sign must be ±1, got {sign}"
            )));
        }
        if feedback.n_inputs() != self.n_outputs() || feedback.n_outputs() != self.n_inputs() {
            return Err(Error::Shape(format!(
                "feedback: plant is {}x{}, feedback path is {}x{}",
                self.n_outputs(),
                self.n_inputs(),
                feedback.n_outputs(),
                feedback.n_inputs()
            )));
        }
        let (a1, b1, c1, d1) = (self.a(), self.b(), self.c(), self.d());
        let (a2, b2, c2, d2) = (feedback.a(), feedback.b(), feedback.c(), feedback.d());
        let m = self.n_inputs();
        let loop_matrix = Matrix::identity(m, m) - d2 * d1 * sign;
        let det = loop_matrix.determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::IllPosed { det });
        }
        let e = loop_matrix.try_inverse().ok_or(Error::IllPosed { det })?;

        // u = E (r + sign·D2·C1·x1 + sign·C2·x2)
        let u_x1 = &e * d2 * c1 * sign;
        let u_x2 = &e * c2 * sign;
        let (n1, n2) = (self.n_states(), feedback.n_states());

        let mut a = Matrix::zeros(n1 + n2, n1 + n2);
        place(&mut a, 0, 0, &(a1 + b1 * &u_x1));
        place(&mut a, 0, n1, &(b1 * &u_x2));
        // y = (C1 + D1 u_x1) x1 + D1 u_x2 x2 + D1 E r
        let y_x1 = c1 + d1 * &u_x1;
        let y_x2 = d1 * &u_x2;
        place(&mut a, n1, 0, &(b2 * &y_x1));
        place(&mut a, n1, n1, &(a2 + b2 * &y_x2));

        let mut b = Matrix::zeros(n1 + n2, m);
        place(&mut b, 0, 0, &(b1 * &e));
        place(&mut b, n1, 0, &(b2 * d1 * &e));

        let mut c = Matrix::zeros(self.n_outputs(), n1 + n2);
        place(&mut c, 0, 0, &y_x1);
        place(&mut c, 0, n1, &y_x2);
        let labels = (self.input_labels.clone(), self.output_labels.clone());
        StateSpace::new(a, b, c, d1 * &e)?.with_labels(labels.0, labels.1)
    }

    /// Keeps the outputs at `indices` (0-based, in the given order).
    pub fn select_outputs(&self, indices: &[usize]) -> Result<StateSpace> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("no outputs selected".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_outputs()) {
            return Err(Error::InvalidInput(format!(
                "output index {bad} out of range for {} outputs",
                self.n_outputs()
            )));
        }
        let c = self.c().select_rows(indices.iter());
        let d = self.d().select_rows(indices.iter());
        let labels = self
            .output_labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i].clone()).collect());
        StateSpace::new(self.a().clone(), self.b().clone(), c, d)?
            .with_labels(self.input_labels.clone(), labels)
    }

    /// Adds `extra` inputs that do not influence the model.
    pub fn append_inputs(&self, extra: usize) -> Result<StateSpace> {
        let (n, m, p) = (self.n_states(), self.n_inputs(), self.n_outputs());
        let mut b = Matrix::zeros(n, m + extra);
        place(&mut b, 0, 0, self.b());
        let mut d = Matrix::zeros(p, m + extra);
        place(&mut d, 0, 0, self.d());
        StateSpace::new(self.a().clone(), b, self.c().clone(), d)
    }

    /// Adds the output of `disturbance` to the output of `self`.
    ///
    /// The result has inputs `[u; w]` where `w` drives the disturbance model, and
    /// output `y = G u + G_w w`.
    pub fn sum_at_output(&self, disturbance: &StateSpace) -> Result<StateSpace> {
        if disturbance.n_outputs() != self.n_outputs() {
            return Err(Error::Shape(format!(
                "sum_at_output: model has {} outputs, disturbance has {}",
                self.n_outputs(),
                disturbance.n_outputs()
            )));
        }
        let combined = StateSpace::block_diagonal(&[self.clone(), disturbance.clone()])?;
        let p = self.n_outputs();
        let mut c = Matrix::zeros(p, combined.n_states());
        place(&mut c, 0, 0, self.c());
        place(&mut c, 0, self.n_states(), disturbance.c());
        let mut d = Matrix::zeros(p, combined.n_inputs());
        place(&mut d, 0, 0, self.d());
        place(&mut d, 0, self.n_inputs(), disturbance.d());
        StateSpace::new(combined.a().clone(), combined.b().clone(), c, d)
    }

    /// Stacks models without coupling: inputs and outputs are concatenated.
    pub fn block_diagonal(models: &[StateSpace]) -> Result<StateSpace> {
        if models.is_empty() {
            return Err(Error::InvalidInput(
                "block_diagonal needs at least one model".into(),
            ));
        }
        let n: usize = models.iter().map(|m| m.n_states()).sum();
        let mi: usize = models.iter().map(|m| m.n_inputs()).sum();
        let po: usize = models.iter().map(|m| m.n_outputs()).sum();
        let (mut a, mut b) = (Matrix::zeros(n, n), Matrix::zeros(n, mi));
        let (mut c, mut d) = (Matrix::zeros(po, n), Matrix::zeros(po, mi));
        let (mut x, mut u, mut y) = (0, 0, 0);
        for m in models {
            place(&mut a, x, x, m.a());
            place(&mut b, x, u, m.b());
            place(&mut c, y, x, m.c());
            place(&mut d, y, u, m.d());
            x += m.n_states();
            u += m.n_inputs();
            y += m.n_outputs();
        }
        StateSpace::new(a, b, c, d)
    }

    /// MIMO model whose `(i, j)` transfer function is `grid[i][j]`.
    ///
    /// Every block must be SISO; states are stacked row by row.
    pub fn mimo_from_blocks(grid: &[Vec<StateSpace>]) -> Result<StateSpace> {
        let rows = grid.len();
        let cols = grid.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 || grid.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape(
                "block grid must be rectangular and non-empty".into(),
            ));
        }
        if let Some(bad) = grid
            .iter()
            .flatten()
            .find(|m| m.n_inputs() != 1 || m.n_outputs() != 1)
        {
            return Err(Error::Shape(format!(
                "grid blocks must be SISO, found {}x{}",
                bad.n_outputs(),
                bad.n_inputs()
            )));
        }
        let n: usize = grid.iter().flatten().map(|m| m.n_states()).sum();
        let mut a = Matrix::zeros(n, n);
        let mut b = Matrix::zeros(n, cols);
        let mut c = Matrix::zeros(rows, n);
        let mut d = Matrix::zeros(rows, cols);
        let mut x = 0;
        for (i, row) in grid.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                place(&mut a, x, x, m.a());
                place(&mut b, x, j, m.b());
                place(&mut c, i, x, m.c());
                d[(i, j)] = m.d()[(0, 0)];
                x += m.n_states();
            }
        }
        StateSpace::new(a, b, c, d)
    }

    /// Change of state coordinates `x̃ = T x`: `(TAT⁻¹, TB, CT⁻¹, D)`.
    pub fn similarity_transform(&self, t: &Matrix) -> Result<StateSpace> {
        let n = self.n_states();
        if t.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "transform is {}x{}, expected {n}x{n}",
                t.nrows(),
                t.ncols()
            )));
        }
        let t_inv = t
            .clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::Singular("similarity transform".into()))?;
        StateSpace::new(
            t * self.a() * &t_inv,
            t * self.b(),
            self.c() * &t_inv,
            self.d().clone(),
        )?
        .with_labels(self.input_labels.clone(), self.output_labels.clone())
    }
}
