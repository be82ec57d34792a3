//! Continuous-time LTI models in state-space form and their algebra.

mod constructors;
mod freq;
mod interconnect;

pub use freq::FrequencyResponse;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, Matrix};

/// Continuous-time realization
///
/// ```text
/// ẋ = A x + B u
/// y = C x + D u
/// ```
///
/// A model with zero states is a static gain `y = D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
    input_labels: Option<Vec<String>>,
    output_labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let nx = a.nrows();
        if a.ncols() != nx {
            return Err(Error::Shape(format!(
                "A is {}x{}, must be square",
                nx,
                a.ncols()
            )));
        }
        if b.nrows() != nx {
            return Err(Error::Shape(format!(
                "B has {} rows, A has {nx}",
                b.nrows()
            )));
        }
        if c.ncols() != nx {
            return Err(Error::Shape(format!(
                "C has {} columns, A has {nx}",
                c.ncols()
            )));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::Shape(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if b.ncols() == 0 || c.nrows() == 0 {
            return Err(Error::Shape(
                "model needs at least one input and one output".into(),
            ));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            ensure_finite(m, name)?;
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            input_labels: None,
            output_labels: None,
        })
    }

    /// Model with `D = 0`.
    pub fn strictly_proper(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let d = Matrix::zeros(c.nrows(), b.ncols());
        Self::new(a, b, c, d)
    }

    /// Static gain `y = D u`.
    pub fn gain(d: Matrix) -> Result<Self> {
        let (p, m) = d.shape();
        Self::new(
            Matrix::zeros(0, 0),
            Matrix::zeros(0, m),
            Matrix::zeros(p, 0),
            d,
        )
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::gain(Matrix::identity(n, n))
    }

    pub fn with_labels(
        mut self,
        inputs: Option<Vec<String>>,
        outputs: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(l) = &inputs {
            if l.len() != self.n_inputs() {
                return Err(Error::Shape(format!(
                    "{} input labels for {} inputs",
                    l.len(),
                    self.n_inputs()
                )));
            }
        }
        if let Some(l) = &outputs {
            if l.len() != self.n_outputs() {
                return Err(Error::Shape(format!(
                    "{} output labels for {} outputs",
                    l.len(),
                    self.n_outputs()
                )));
            }
        }
        self.input_labels = inputs;
        self.output_labels = outputs;
        Ok(self)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn input_labels(&self) -> Option<&[String]> {
        self.input_labels.as_deref()
    }

    pub fn output_labels(&self) -> Option<&[String]> {
        self.output_labels.as_deref()
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn has_feedthrough(&self) -> bool {
        self.d.iter().any(|v| *v != 0.0)
    }

    /// Fails with [`Error::Feedthrough`] when `D ≠ 0`.
    pub fn ensure_strictly_proper(&self) -> Result<()> {
        if self.has_feedthrough() {
            let max_abs = self.d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            return Err(Error::Feedthrough { max_abs });
        }
        Ok(())
    }
}
