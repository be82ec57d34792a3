//! `covkit`: pointing error covariances from the command line.

mod error;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covkit::metrics::{log_grid, DEFAULT_TOL_BALANCE, DEFAULT_TOL_PSD};
use covkit::model_file::{dump_model, ModelFile};
use covkit::oracles::monte_carlo_metrics;
use covkit::{linalg, scenarios, Error, ExposureConfig, PointingAnalyzer, PointingCovariances};

use error::{exit, CliError, CliResult};
use output::{covariance_header, covariance_row, csv_bytes, format_matrix, num, write_atomic};

const TOL_ENV: &str = "COVKIT_TOL_BALANCE";

#[derive(Parser)]
#[command(
    name = "covkit",
    version,
    about = "Accuracy, displacement, smear and jitter covariances of LTI systems"
)]
struct Cli {
    /// Also write the loaded model as a plain A/B/C/D JSON file.
    #[arg(long, global = true, value_name = "PATH")]
    dump_model: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// Model JSON file, or `bundled:<name>` (e.g. `bundled:mimo`, `bundled:satellite/nominal_f1`).
    #[arg(long)]
    model: String,
}

#[derive(Subcommand)]
enum Command {
    /// Covariances at one exposure time.
    Analyze {
        #[command(flatten)]
        model: ModelArg,
        /// Exposure time T in seconds.
        #[arg(long)]
        exposure: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Covariances over logarithmically spaced exposure times.
    Sweep {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        tmin: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 30)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Magnitude of every input/output channel in dB over a logarithmic grid.
    Freqresp {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        wmin: f64,
        #[arg(long)]
        wmax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimates compared with the analytic covariances.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        exposure: f64,
        /// Sampling step; must divide the exposure.
        #[arg(long)]
        step: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dimensions, eigenvalues, stability and feedthrough of a model.
    Validate {
        #[command(flatten)]
        model: ModelArg,
    },
}

fn load(arg: &ModelArg) -> CliResult<ModelFile> {
    Ok(match arg.model.strip_prefix("bundled:") {
        Some(name) => scenarios::load_bundled(name)?,
        None => ModelFile::load(&arg.model)?,
    })
}

fn tol_balance() -> CliResult<f64> {
    match std::env::var(TOL_ENV) {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(t) if t.is_finite() && t > 0.0 => Ok(t),
            _ => Err(CliError::Usage(format!(
                "{TOL_ENV} must be a positive number, got '{v}'"
            ))),
        },
        Err(_) => Ok(DEFAULT_TOL_BALANCE),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            match std::io::stdout().write_all(bytes) {
                // reader went away, e.g. `| head`
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|source| CliError::Io {
                    context: "cannot write to stdout".into(),
                    source,
                }),
            }
        }
    }
}

/// Evaluates at each exposure with the balance check deferred, so every row can be
/// written before the exit status is decided.
fn evaluate(analyzer: &PointingAnalyzer, exposures: &[f64]) -> CliResult<Vec<PointingCovariances>> {
    let template = ExposureConfig::with_tolerances(exposures[0], DEFAULT_TOL_PSD, f64::MAX)?;
    Ok(analyzer.sweep(exposures, &template)?)
}

fn check_balance(rows: &[PointingCovariances], tol: f64) -> CliResult<()> {
    let bad: Vec<String> = rows
        .iter()
        .filter(|pc| pc.balance_residual().is_nan() || pc.balance_residual() > tol)
        .map(|pc| {
            format!(
                "T = {} (residual {:.3e})",
                pc.exposure,
                pc.balance_residual()
            )
        })
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Inconsistent(format!(
            "balance residual above {tol:.1e} at {}",
            bad.join(", ")
        ))
        .into())
    }
}

fn analyze(file: &ModelFile, exposure: f64, out: Option<&Path>) -> CliResult<i32> {
    let tol = tol_balance()?;
    ExposureConfig::new(exposure)?;
    let analyzer = PointingAnalyzer::new(&file.model)?;
    let rows = evaluate(&analyzer, &[exposure])?;
    let pc = &rows[0];
    let n_p = pc.n_outputs();
    let bytes = csv_bytes(&covariance_header(n_p), &[covariance_row(pc)])?;
    if out.is_some() {
        emit(out, &bytes)?;
    }
    let labels = file.model.output_labels();
    eprintln!("model {} at T = {exposure} s", file.origin);
    let mut text = String::new();
    for (name, m) in [
        ("Sigma_A (accuracy)", &pc.sigma_a),
        ("Sigma_D (displacement)", &pc.sigma_d),
        ("Sigma_S (smear)", &pc.sigma_s),
        ("Sigma_S/12", &pc.smear_contribution()),
        ("Sigma_J (jitter)", &pc.sigma_j),
    ] {
        text += &format_matrix(name, m, labels);
    }
    let _ = writeln!(
        text,
        "balance residual {:.3e} (tolerance {tol:.1e})",
        pc.balance_residual()
    );
    emit(None, text.as_bytes())?;
    check_balance(&rows, tol)?;
    Ok(exit::OK)
}

fn sweep(
    file: &ModelFile,
    tmin: f64,
    tmax: f64,
    points: usize,
    out: Option<&Path>,
) -> CliResult<i32> {
    let tol = tol_balance()?;
    let grid = log_grid(tmin, tmax, points)?;
    let analyzer = PointingAnalyzer::new(&file.model)?;
    let rows = evaluate(&analyzer, &grid)?;
    let n_p = rows[0].n_outputs();
    let records: Vec<_> = rows.iter().map(covariance_row).collect();
    emit(out, &csv_bytes(&covariance_header(n_p), &records)?)?;
    if out.is_some() {
        eprintln!("{} exposure times from {tmin} s to {tmax} s", rows.len());
    }
    check_balance(&rows, tol)?;
    Ok(exit::OK)
}

fn freqresp(
    file: &ModelFile,
    wmin: f64,
    wmax: f64,
    points: usize,
    out: Option<&Path>,
) -> CliResult<i32> {
    let grid = log_grid(wmin, wmax, points).map_err(|_| {
        CliError::Usage(format!(
            "need 0 < wmin < wmax and at least 2 points, got [{wmin}, {wmax}] with {points}"
        ))
    })?;
    let sys = &file.model;
    let (ny, nu) = (sys.n_outputs(), sys.n_inputs());
    let mut header = vec!["omega".to_string()];
    for o in 1..=ny {
        for i in 1..=nu {
            header.push(format!("mag_dB_{o}{i}"));
        }
    }
    header.push("status".into());
    let mut rows = Vec::with_capacity(grid.len());
    let mut singular = Vec::new();
    for &w in &grid {
        let mut row = vec![num(w)];
        match sys.gain_at(w) {
            Ok(g) => {
                for o in 0..ny {
                    for i in 0..nu {
                        row.push(num(20.0 * g[(o, i)].norm().log10()));
                    }
                }
                row.push("ok".into());
            }
            Err(Error::SingularFrequency { omega }) => {
                row.extend(std::iter::repeat_n("nan".to_string(), ny * nu));
                row.push("singular".into());
                singular.push(omega);
            }
            Err(e) => return Err(e.into()),
        }
        rows.push(row);
    }
    emit(out, &csv_bytes(&header, &rows)?)?;
    if singular.is_empty() {
        Ok(exit::OK)
    } else {
        eprintln!(
            "error: frequency response singular at {} grid point(s), first at omega = {}",
            singular.len(),
            singular[0]
        );
        Ok(exit::CONSISTENCY)
    }
}

fn simulate(
    file: &ModelFile,
    exposure: f64,
    step: f64,
    trials: usize,
    seed: u64,
    out: Option<&Path>,
) -> CliResult<i32> {
    let analytic =
        PointingAnalyzer::new(&file.model)?.covariances(&ExposureConfig::new(exposure)?)?;
    let report = monte_carlo_metrics(&file.model, exposure, step, trials, seed)?;
    let z = report.z_scores(&analytic);
    let header: Vec<String> = ["quantity", "i", "j", "estimate", "stderr", "analytic", "z"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    let s12 = |m: &covkit::Matrix| m / 12.0;
    let sets = [
        (
            "SigmaA",
            &report.est_a,
            &report.stderr_a,
            &analytic.sigma_a,
            &z.a,
        ),
        (
            "SigmaD",
            &report.est_d,
            &report.stderr_d,
            &analytic.sigma_d,
            &z.d,
        ),
        (
            "SigmaS",
            &report.est_s,
            &report.stderr_s,
            &analytic.sigma_s,
            &z.s,
        ),
        (
            "SigmaJ",
            &report.est_j,
            &report.stderr_j,
            &analytic.sigma_j,
            &z.j,
        ),
    ];
    for (name, est, se, exact, zm) in sets {
        for i in 0..est.nrows() {
            for j in 0..est.ncols() {
                rows.push(vec![
                    name.to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    num(est[(i, j)]),
                    num(se[(i, j)]),
                    num(exact[(i, j)]),
                    num(zm[(i, j)]),
                ]);
            }
        }
    }
    emit(out, &csv_bytes(&header, &rows)?)?;
    eprintln!(
        "{trials} trials, seed {seed}, T = {exposure} s, h = {} s; max |z| = {:.2}",
        report.step,
        z.max_abs()
    );
    eprint!(
        "{}",
        format_matrix("estimated Sigma_S/12", &s12(&report.est_s), None)
    );
    eprint!(
        "{}",
        format_matrix(
            "balance defect of the estimates",
            &report.balance_defect(),
            None
        )
    );
    Ok(exit::OK)
}

fn validate(file: &ModelFile) -> CliResult<i32> {
    let sys = &file.model;
    let mut text = String::new();
    let _ = writeln!(text, "model      {}", file.origin);
    let _ = writeln!(text, "states     n_x = {}", sys.n_states());
    let _ = writeln!(text, "outputs    n_p = {}", sys.n_outputs());
    let _ = writeln!(text, "inputs     n_u = {}", sys.n_inputs());
    for (name, n) in &file.report.subsystems {
        let _ = writeln!(text, "subsystem  {name}: {n} states");
    }
    for s in &file.report.steps {
        let wp = s
            .well_posedness
            .map(|d| format!(", |det(I - sign D_fb D)| = {d:.3e} (well-posed)"))
            .unwrap_or_default();
        let _ = writeln!(
            text,
            "step       {} ({}): {} states, {} in, {} out{wp}",
            s.name, s.op, s.n_states, s.n_inputs, s.n_outputs
        );
    }
    let spectrum = linalg::eigenvalues(sys.a())?;
    let _ = writeln!(text, "eigenvalues (sorted by real part)");
    for (k, l) in spectrum.sorted().iter().enumerate() {
        let _ = writeln!(text, "  {:>3}  {:>+16.8e} {:>+16.8e}j", k + 1, l.re, l.im);
    }
    if sys.has_feedthrough() {
        let max = sys.d().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let _ = writeln!(text, "warning: nonzero D (max |D| = {max:.3e}); covariance analysis requires D = 0 on the noise path");
    } else {
        let _ = writeln!(text, "feedthrough D = 0");
    }
    match linalg::check_hurwitz(sys.a()) {
        Ok(_) => {
            let _ = writeln!(
                text,
                "stable (max real part {:.6e})",
                spectrum.max_real_part()
            );
            emit(None, text.as_bytes())?;
            Ok(exit::OK)
        }
        Err(e @ Error::Unstable { .. }) => {
            let _ = writeln!(text, "unstable");
            emit(None, text.as_bytes())?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    let model_arg = match &cli.command {
        Command::Analyze { model, .. }
        | Command::Sweep { model, .. }
        | Command::Freqresp { model, .. }
        | Command::Simulate { model, .. }
        | Command::Validate { model } => model,
    };
    let file = load(model_arg)?;
    if let Some(path) = &cli.dump_model {
        write_atomic(path, dump_model(&file.model).as_bytes())?;
    }
    match cli.command {
        Command::Analyze { exposure, out, .. } => analyze(&file, exposure, out.as_deref()),
        Command::Sweep {
            tmin,
            tmax,
            points,
            out,
            ..
        } => sweep(&file, tmin, tmax, points, out.as_deref()),
        Command::Freqresp {
            wmin,
            wmax,
            points,
            out,
            ..
        } => freqresp(&file, wmin, wmax, points, out.as_deref()),
        Command::Simulate {
            exposure,
            step,
            trials,
            seed,
            out,
            ..
        } => simulate(&file, exposure, step, trials, seed, out.as_deref()),
        Command::Validate { .. } => validate(&file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
