//! Turning a [`CaseConfig`] into grids and solver runs.
//!
//! Expressions are sampled in the coordinates of the configuration. The
//! solvers work with the normalised operator, so data is moved to the
//! normalised frame before solving and the solution is moved back.

use std::time::Instant;

use hypotorus::expr::{symbolic_diff, Expr, Var};
use hypotorus::solvers::{solve_a, solve_ab, solve_f};
use hypotorus::verify::{
    default_band, error_mod_additive, error_mod_multiplicative, included_mask,
};
use hypotorus::{
    normalize, Complex64, GridFunction, KernelContext, NormalizedField, SolveContext, SolveReport,
    Verdict,
};

use crate::config::{CaseConfig, Equation};
use crate::error::{CliError, CliResult};

/// Result of a `solve` run, in the coordinates of the configuration.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub equation: Equation,
    pub report: SolveReport,
    /// Solution on the configuration grid, if one was produced.
    pub u: Option<GridFunction>,
    /// Error against `manufactured_w` outside the band, modulo an additive
    /// constant for `f` and a multiplicative one otherwise.
    pub manufactured_error: Option<f64>,
    pub wall_time_s: f64,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        verdict_code(self.report.solvable)
    }
}

pub fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Yes => 0,
        Verdict::No => 2,
        Verdict::Inconclusive => 3,
    }
}

pub fn normalized(cfg: &CaseConfig) -> CliResult<NormalizedField> {
    Ok(normalize(&cfg.field)?)
}

/// Operator and solver options for the configuration at grid size `n`.
pub fn build_context(cfg: &CaseConfig, n: usize) -> CliResult<SolveContext> {
    let nf = normalized(cfg)?;
    let kernel = KernelContext::new(&nf, n, cfg.refine_depth, cfg.theta_tol)?;
    Ok(SolveContext::new(kernel, cfg.solver.clone())?)
}

fn sample(e: &Expr, n: usize) -> CliResult<GridFunction> {
    Ok(GridFunction::try_from_fn(n, |x, y| e.eval(x, y))?)
}

/// `w` and `L w` on the configuration grid, with `L` the operator of the
/// configured field.
fn manufactured(cfg: &CaseConfig, w: &Expr, n: usize) -> CliResult<(GridFunction, GridFunction)> {
    let wx = symbolic_diff(w, Var::X)
        .map_err(|e| CliError::schema("/rhs/manufactured_w", e.to_string()))?;
    let wy = symbolic_diff(w, Var::Y)
        .map_err(|e| CliError::schema("/rhs/manufactured_w", e.to_string()))?;
    let lw = GridFunction::try_from_fn(n, |x, y| {
        let (a, b) = cfg.field.raw_coeffs(x, y)?;
        Ok(b * wx.eval(x, y)? - a * wy.eval(x, y)?)
    })?;
    Ok((sample(w, n)?, lw))
}

/// Runs the configured equation with a prepared context.
pub fn run_solve(cfg: &CaseConfig, ctx: &SolveContext) -> CliResult<Outcome> {
    let start = Instant::now();
    let equation = cfg
        .equation
        .ok_or_else(|| CliError::schema("/equation", "missing required key"))?;
    let nf = ctx.kernel.field();
    let n = ctx.n();
    let rhs = &cfg.rhs;
    let w = match &rhs.manufactured_w {
        Some(w) => Some(manufactured(cfg, w, n)?),
        None => None,
    };
    let given = |e: &Option<Expr>| e.as_ref().map(|e| sample(e, n)).transpose();
    let lw = || w.as_ref().map(|(_, lw)| lw.clone());

    let mut report = match equation {
        Equation::F => {
            let f = given(&rhs.f)?
                .or_else(lw)
                .expect("validated config supplies f");
            solve_f(ctx, &nf.rhs_to_working(&f))?
        }
        Equation::A => {
            let a = given(&rhs.a)?
                .or_else(lw)
                .expect("validated config supplies A");
            solve_a(ctx, &nf.rhs_to_working(&a))?
        }
        Equation::Ab => {
            let b = given(&rhs.b)?.expect("validated config supplies B");
            let a = match given(&rhs.a)? {
                Some(a) => a,
                None => {
                    // u = exp(w) solves Lu = Au + B conj(u) for A = Lw - B exp(conj(w) - w)
                    let (wg, lwg) = w
                        .as_ref()
                        .expect("validated config supplies manufactured_w");
                    let phase = b.zip_map(wg, |b, w| b * (w.conj() - w).exp())?;
                    lwg.sub(&phase)?
                }
            };
            solve_ab(
                ctx,
                &nf.rhs_to_working(&a),
                &nf.rhs_to_working(&b),
                cfg.solver.k_max,
            )?
        }
    };

    let factor = nf.operator_factor();
    if factor.norm() != 1.0 {
        report.residual_sup /= factor.norm();
        report.residual_l2 /= factor.norm();
    }
    if nf.flip_y || (factor - 1.0).norm() > 1e-12 {
        report.notes.push(format!(
            "normalised operator is ({:.6e}{:+.6e}i) L{}; nu, j, k refer to it",
            factor.re,
            factor.im,
            if nf.flip_y { " after y -> -y" } else { "" }
        ));
    }

    let manufactured_error = match (&w, &report.u) {
        (Some((wg, _)), Some(u)) => {
            let mask = included_mask(nf, n, default_band(n));
            let ww = nf.to_working(wg);
            let err = match equation {
                Equation::F => error_mod_additive(u, &ww, &mask)?,
                _ => error_mod_multiplicative(u, &ww, &mask)?,
            };
            report.notes.push(format!(
                "error against manufactured_w outside the band (modulo {} constant): {err:.3e}",
                if equation == Equation::F {
                    "an additive"
                } else {
                    "a multiplicative"
                }
            ));
            Some(err)
        }
        _ => None,
    };

    let u = report.u.as_ref().map(|u| nf.from_working(u));
    Ok(Outcome {
        equation,
        report,
        u,
        manufactured_error,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Splits an optional complex number into optional real and imaginary parts.
pub fn complex_parts(z: Option<Complex64>) -> (Option<f64>, Option<f64>) {
    // adding zero turns -0.0 into 0.0
    (z.map(|z| z.re + 0.0), z.map(|z| z.im + 0.0))
}
