use super::{ensure_finite, ensure_square, Matrix};
use crate::error::{Error, Result};

// Padé [13/13] numerator coefficients and the 1-norm bound below which the
// approximant is accurate to double precision without scaling.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential `e^{M t}` by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix> {
    ensure_square(m, "expm argument")?;
    ensure_finite(m, "expm argument")?;
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("expm time {t} is not finite")));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let mut a = m * t;
    let norm = one_norm(&a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    if squarings > 0 {
        a *= 2f64.powi(-squarings);
    }

    let ident = Matrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::NumericRange("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericRange(format!(
            "exponential of a matrix with 1-norm {norm:.3e} overflows"
        )));
    }
    Ok(r)
}

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
