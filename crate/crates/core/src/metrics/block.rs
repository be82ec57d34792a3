//! The block system `Ẋ = M X` whose solution carries the finite-horizon covariance
//! of the state augmented with a double integrator on the output.
//!
//! Block rows of `X`, in order:
//!
//! | block      | size  | dynamics                    |
//! |------------|-------|-----------------------------|
//! | `Y_z2z2`   | n_p   | `W_z1z2 + 2 Y_z1z2`         |
//! | `W_z1z2`   | n_p   | `C P̃_xz2`                   |
//! | `P̃_xz2`    | n_x   | `A P̃_xz2 + P̃_xz1`            |
//! | `Y_z1z2`   | n_p   | `Y_z1z1`                    |
//! | `Y_z1z1`   | n_p   | `C P̃_xz1`                   |
//! | `P̃_xz1`    | n_x   | `A P̃_xz1 + P C^T F`          |
//! | `F`        | n_p   | `0`, `F(0) = I`             |
//!
//! The last four rows form the reduced system for the displacement alone.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Row offsets of each block inside `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub n_x: usize,
    pub n_p: usize,
}

impl BlockLayout {
    pub fn new(n_x: usize, n_p: usize) -> Self {
        Self { n_x, n_p }
    }

    /// `5 n_p + 2 n_x`.
    pub fn dim(&self) -> usize {
        5 * self.n_p + 2 * self.n_x
    }

    pub fn y_z2z2(&self) -> usize {
        0
    }

    pub fn w_z1z2(&self) -> usize {
        self.n_p
    }

    pub fn p_xz2(&self) -> usize {
        2 * self.n_p
    }

    pub fn y_z1z2(&self) -> usize {
        2 * self.n_p + self.n_x
    }

    pub fn y_z1z1(&self) -> usize {
        3 * self.n_p + self.n_x
    }

    pub fn p_xz1(&self) -> usize {
        4 * self.n_p + self.n_x
    }

    pub fn f(&self) -> usize {
        4 * self.n_p + 2 * self.n_x
    }
}

fn put(m: &mut Matrix, row: usize, col: usize, block: &Matrix) {
    if !block.is_empty() {
        m.view_mut((row, col), block.shape()).copy_from(block);
    }
}

fn check_dims(a: &Matrix, c: &Matrix, p: &Matrix) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n || c.ncols() != n || p.shape() != (n, n) {
        return Err(Error::Shape(format!(
            "block system needs A n×n, C p×n, P n×n; got A {}x{}, C {}x{}, P {}x{}",
            a.nrows(),
            a.ncols(),
            c.nrows(),
            c.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    Ok(())
}

/// Assembles the `(5 n_p + 2 n_x)`-square matrix `M`.
pub(crate) fn assemble_m(a: &Matrix, c: &Matrix, p: &Matrix) -> Result<Matrix> {
    check_dims(a, c, p)?;
    let layout = BlockLayout::new(a.nrows(), c.nrows());
    let (nx, np) = (layout.n_x, layout.n_p);
    let eye_p = Matrix::identity(np, np);
    let mut m = Matrix::zeros(layout.dim(), layout.dim());

    put(&mut m, layout.y_z2z2(), layout.w_z1z2(), &eye_p);
    put(&mut m, layout.y_z2z2(), layout.y_z1z2(), &(&eye_p * 2.0));
    put(&mut m, layout.w_z1z2(), layout.p_xz2(), c);
    put(&mut m, layout.p_xz2(), layout.p_xz2(), a);
    put(
        &mut m,
        layout.p_xz2(),
        layout.p_xz1(),
        &Matrix::identity(nx, nx),
    );
    put(&mut m, layout.y_z1z2(), layout.y_z1z1(), &eye_p);
    put(&mut m, layout.y_z1z1(), layout.p_xz1(), c);
    put(&mut m, layout.p_xz1(), layout.p_xz1(), a);
    put(&mut m, layout.p_xz1(), layout.f(), &(p * c.transpose()));
    Ok(m)
}

/// Assembles the `(2 n_p + n_x)`-square reduced matrix for `[Y_z1z1; P̃_xz1; F]`.
pub(crate) fn assemble_reduced(a: &Matrix, c: &Matrix, p: &Matrix) -> Result<Matrix> {
    check_dims(a, c, p)?;
    let (nx, np) = (a.nrows(), c.nrows());
    let mut m = Matrix::zeros(2 * np + nx, 2 * np + nx);
    put(&mut m, 0, np, c);
    put(&mut m, np, np, a);
    put(&mut m, np, np + nx, &(p * c.transpose()));
    Ok(m)
}
