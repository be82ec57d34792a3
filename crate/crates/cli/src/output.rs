use std::io::Write;
use std::path::Path;

use covkit::{Matrix, PointingCovariances};

use crate::error::{CliError, CliResult};

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |context: &str| {
        let context = format!("{context} {}", path.display());
        move |source| CliError::Io { context, source }
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).map_err(io("cannot create temporary file for"))?;
    tmp.write_all(contents).map_err(io("cannot write"))?;
    tmp.as_file().sync_all().map_err(io("cannot flush"))?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .map_err(io("cannot move into place"))?;
    Ok(())
}

/// Seventeen significant digits, enough to round-trip.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn covariance_header(n_p: usize) -> Vec<String> {
    let mut h = vec!["T".to_string()];
    for prefix in ["SigmaA", "SigmaD", "SigmaS12", "SigmaJ"] {
        for i in 1..=n_p {
            for j in 1..=n_p {
                h.push(format!("{prefix}_{i}{j}"));
            }
        }
    }
    h.push("balance_residual".into());
    h
}

pub fn covariance_row(pc: &PointingCovariances) -> Vec<String> {
    let mut row = vec![num(pc.exposure)];
    let s12 = pc.smear_contribution();
    for m in [&pc.sigma_a, &pc.sigma_d, &s12, &pc.sigma_j] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                row.push(num(m[(i, j)]));
            }
        }
    }
    row.push(num(pc.balance_residual()));
    row
}

pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        context: "cannot finish CSV".into(),
        source: e.into_error(),
    })
}

/// Fixed-width matrix block for terminal output.
pub fn format_matrix(name: &str, m: &Matrix, labels: Option<&[String]>) -> String {
    let mut s = format!("{name}\n");
    for i in 0..m.nrows() {
        let label = labels
            .and_then(|l| l.get(i))
            .cloned()
            .unwrap_or_else(|| format!("p{}", i + 1));
        s.push_str(&format!("  {label:>8} "));
        for j in 0..m.ncols() {
            s.push_str(&format!(" {:>14.6e}", m[(i, j)]));
        }
        s.push('\n');
    }
    s
}
