//! Subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hypotorus::field::{char_set_info, im_ab_range, injectivity_probe};
use hypotorus::verify::{convergence_study, default_band, operator_check, ResidualReport};
use hypotorus::{theta_check, Complex64, GridFunction, Lattice, ThetaContext, Verdict};
use serde_json::{json, Value};

use crate::case::{build_context, normalized, run_solve, verdict_code, Outcome};
use crate::config::{load_config, MAX_GRID_N, MIN_GRID_N};
use crate::error::{CliError, CliResult};
use crate::output::write_outputs;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "HYPOTORUS_THREADS";

/// Seed of the sample points used by `theta-check`.
pub const THETA_CHECK_SEED: u64 = 0x7e7a;

pub const THETA_PERIOD_TOL: f64 = 1e-10;
pub const THETA_QUASI_TOL: f64 = 1e-9;
pub const THETA_ZERO_TOL: f64 = 1e-10;
/// Quasi-periodicity tolerance of `T_omega P` is this times `1 + |int P|`.
pub const OPERATOR_PERIOD_TOL: f64 = 5e-3;
pub const OPERATOR_INVERSION_TOL: f64 = 5e-2;

#[derive(Debug, Parser)]
#[command(
    name = "hypotorus",
    version,
    about = "Cauchy-Pompeiu operator and solvers for vector fields on the 2-torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Periods, tau and characteristic-set report of a field.
    FieldInfo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Checks the period, quasi-period and zero of theta.
    ThetaCheck {
        /// Modulus written as `RE+IMi`.
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Quasi-periodicity and inversion properties of the operator.
    OperatorCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solves the configured equation, writing `P.u.csv` and `P.report.json`.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Runs the configured equation at several grid sizes.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
    },
}

/// Parses `RE+IMi`, `RE-IMi` or `IMi`.
pub fn parse_tau(text: &str) -> CliResult<Complex64> {
    let bad = || CliError::Usage(format!("cannot parse tau `{text}`; expected RE+IMi"));
    let body = text.trim().strip_suffix('i').ok_or_else(bad)?;
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i)
        .last();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        s => s,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.trim_start_matches('+').parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn thread_count() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{THREADS_ENV}: {e}"))),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{s}`"
            ))),
        },
    }
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = thread_count().and_then(|threads| match threads {
        None => dispatch(cli.command, out),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?;
            pool.install(|| dispatch(cli.command, out))
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn print(out: &mut (dyn Write + Send), v: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).expect("json value serialises");
    writeln!(out, "{text}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn dispatch(command: Command, out: &mut (dyn Write + Send)) -> CliResult<i32> {
    match command {
        Command::FieldInfo { config } => field_info(&config, out),
        Command::ThetaCheck { tau, samples } => theta_check_cmd(&tau, samples, out),
        Command::OperatorCheck { config } => operator_check_cmd(&config, out),
        Command::Solve { config, out_prefix } => solve_cmd(&config, &out_prefix, out),
        Command::Convergence { config, sizes } => convergence_cmd(&config, &sizes, out),
    }
}

fn field_info(path: &Path, out: &mut (dyn Write + Send)) -> CliResult<i32> {
    let cfg = load_config(path)?;
    let nf = normalized(&cfg)?;
    let cs = char_set_info(&cfg.field)?;
    let (im_min, im_max) = im_ab_range(&cfg.field, cfg.grid_n)?;
    let separation = injectivity_probe(&nf, cfg.grid_n)?;
    let components: Vec<Value> = cs
        .components
        .iter()
        .map(|c| {
            json!({
                "description": c.description,
                "declared_sigma": c.declared_sigma,
                "min_off_band": c.min_off,
                "fitted_rate": c.fitted_rate,
                "rate_min": c.rate_min,
                "rate_max": c.rate_max,
                "mismatch": c.mismatch,
            })
        })
        .collect();
    let mismatch = cs.components.iter().any(|c| c.mismatch);
    print(
        out,
        &json!({
            "field": cfg.field.name,
            "c1_re": nf.c1.re, "c1_im": nf.c1.im,
            "c2_re": nf.c2.re, "c2_im": nf.c2.im,
            "tau_re": nf.tau().re, "tau_im": nf.tau().im,
            "flip_y": nf.flip_y,
            "exact_first_integral": nf.has_exact(),
            "sigma_max": cs.sigma_max,
            "min_abs_im_ab": cs.min_abs_im_ab,
            "im_ab_min": im_min,
            "im_ab_max": im_max,
            "z_min_separation": separation,
            "components": components,
        }),
    )?;
    Ok(if mismatch { 3 } else { 0 })
}

fn theta_check_cmd(tau: &str, samples: usize, out: &mut (dyn Write + Send)) -> CliResult<i32> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let tau = parse_tau(tau)?;
    let ctx = ThetaContext::new(Lattice::new(tau)?, 1e-14)?;
    let c = theta_check(&ctx, samples, THETA_CHECK_SEED)?;
    let pass = c.period <= THETA_PERIOD_TOL
        && c.quasi_period <= THETA_QUASI_TOL
        && c.zero <= THETA_ZERO_TOL;
    print(
        out,
        &json!({
            "tau_re": tau.re,
            "tau_im": tau.im,
            "samples": c.samples,
            "terms": ctx.m_max(),
            "period_dev": c.period,
            "quasi_period_rel_dev": c.quasi_period,
            "abs_theta_z0": c.zero,
            "pass": pass,
        }),
    )?;
    Ok(if pass { 0 } else { 3 })
}

/// The test densities of `operator-check`: `1`, `e^{2 pi i x}`, `sin^2(pi y)`.
pub fn operator_densities(n: usize) -> CliResult<Vec<(&'static str, GridFunction)>> {
    let tp = 2.0 * std::f64::consts::PI;
    Ok(vec![
        ("1", GridFunction::constant(n, Complex64::new(1.0, 0.0))?),
        (
            "exp(2*pi*i*x)",
            GridFunction::from_fn(n, |x, _| Complex64::new(0.0, tp * x).exp())?,
        ),
        (
            "sin(pi*y)^2",
            GridFunction::from_fn(n, |_, y| Complex64::new((0.5 * tp * y).sin().powi(2), 0.0))?,
        ),
    ])
}

fn operator_check_cmd(path: &Path, out: &mut (dyn Write + Send)) -> CliResult<i32> {
    let cfg = load_config(path)?;
    let n = cfg.grid_n;
    let ctx = build_context(&cfg, n)?;
    let densities = operator_densities(n)?;
    let refs: Vec<&GridFunction> = densities.iter().map(|(_, g)| g).collect();
    let band = default_band(n);
    let checks = operator_check(&ctx.kernel, &refs, Some(band))?;
    let mut all = true;
    let rows: Vec<Value> = densities
        .iter()
        .zip(&checks)
        .map(|((name, _), c)| {
            let tol = OPERATOR_PERIOD_TOL * (1.0 + c.integral.norm());
            let inv = c.inversion.expect("inversion requested");
            let pass =
                c.period_x <= tol && c.period_y <= tol && inv.sup_norm <= OPERATOR_INVERSION_TOL;
            all &= pass;
            json!({
                "density": name,
                "integral_re": c.integral.re,
                "integral_im": c.integral.im,
                "period_x_dev": c.period_x,
                "period_y_dev": c.period_y,
                "period_tol": tol,
                "inversion_sup": inv.sup_norm,
                "inversion_l2": inv.l2_norm,
                "inversion_tol": OPERATOR_INVERSION_TOL,
                "excluded_fraction": inv.excluded_fraction,
                "pass": pass,
            })
        })
        .collect();
    print(
        out,
        &json!({ "grid_n": n, "band": band, "densities": rows, "pass": all }),
    )?;
    Ok(if all { 0 } else { 3 })
}

fn solve_cmd(path: &Path, prefix: &Path, out: &mut (dyn Write + Send)) -> CliResult<i32> {
    let cfg = load_config(path)?;
    let ctx = build_context(&cfg, cfg.grid_n)?;
    let outcome = run_solve(&cfg, &ctx)?;
    let (csv, json) = write_outputs(prefix, &outcome, cfg.grid_n)?;
    print(
        out,
        &json!({
            "solvable": outcome.report.solvable.to_string(),
            "csv": csv.display().to_string(),
            "report": json.display().to_string(),
        }),
    )?;
    Ok(outcome.exit_code())
}

fn convergence_cmd(path: &Path, sizes: &[usize], out: &mut (dyn Write + Send)) -> CliResult<i32> {
    let cfg = load_config(path)?;
    if let Some(&n) = sizes
        .iter()
        .find(|&&n| !(MIN_GRID_N..=MAX_GRID_N).contains(&n))
    {
        return Err(CliError::Usage(format!(
            "size {n} outside [{MIN_GRID_N}, {MAX_GRID_N}]"
        )));
    }
    let mut outcomes: Vec<Outcome> = Vec::new();
    let mut failure: Option<CliError> = None;
    let rows = convergence_study(sizes, |n| {
        let run = build_context(&cfg, n).and_then(|ctx| run_solve(&cfg, &ctx));
        match run {
            Ok(o) => {
                let r = ResidualReport {
                    sup_norm: o.report.residual_sup,
                    l2_norm: o.report.residual_l2,
                    excluded_fraction: 0.0,
                    n,
                };
                outcomes.push(o);
                Ok(r)
            }
            Err(e) => {
                let msg = e.to_string();
                failure = Some(e);
                Err(hypotorus::Error::InvalidArgument(msg))
            }
        }
    });
    let rows = match (rows, failure) {
        (_, Some(e)) => return Err(e),
        (r, None) => r?,
    };
    let mut prev_err: Option<f64> = None;
    let table: Vec<Value> = rows
        .iter()
        .zip(&outcomes)
        .map(|(row, o)| {
            let err = o.manufactured_error;
            let err_ratio = match (prev_err, err) {
                (Some(p), Some(e)) if e > 0.0 => Some(p / e),
                _ => None,
            };
            prev_err = err;
            json!({
                "n": row.n,
                "solvable": o.report.solvable.to_string(),
                "residual_sup": row.sup_norm,
                "residual_l2": row.l2_norm,
                "residual_ratio": row.ratio,
                "manufactured_error": err,
                "error_ratio": err_ratio,
                "wall_time_s": o.wall_time_s,
            })
        })
        .collect();
    print(out, &json!({ "rows": table }))?;
    let worst = outcomes
        .iter()
        .map(|o| o.report.solvable)
        .find(|v| *v != Verdict::Yes)
        .unwrap_or(Verdict::Yes);
    Ok(verdict_code(worst))
}
