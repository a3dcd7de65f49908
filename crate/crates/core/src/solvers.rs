//! Global solvers for `Lu = f`, `Lu = Au` and `Lu = Au + B conj(u)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::KernelContext;
use crate::lattice::{Lattice, TorusPoint};
use crate::verify::{apply_l_fd, default_band, residual_report, ResidualReport};

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);
/// Relative tolerance on the mean of `f` in the solvability test for `Lu = f`.
pub const MEAN_TOL: f64 = 1e-6;
/// Scaled lattice tolerance used when the offset comes from a computed fixed point.
pub const SCALED_LATTICE_TOL: f64 = 1e-2;
/// Number of abscissae at which boundary offsets are sampled.
const OFFSET_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub k_max: usize,
    pub damping: f64,
    pub max_iter: usize,
    pub picard_tol: f64,
    pub lattice_tol: f64,
    /// Residual exclusion band; `None` means `4/n`.
    pub band: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            k_max: 3,
            damping: 0.5,
            max_iter: 200,
            picard_tol: 1e-8,
            lattice_tol: 1e-6,
            band: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "damping {} must lie in (0, 1]",
                self.damping
            )));
        }
        if !(self.picard_tol > 0.0) || !(self.lattice_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// A kernel context together with solver options.
#[derive(Debug)]
pub struct SolveContext {
    pub kernel: KernelContext,
    pub options: SolverOptions,
}

impl SolveContext {
    pub fn new(kernel: KernelContext, options: SolverOptions) -> Result<Self> {
        options.validate()?;
        Ok(Self { kernel, options })
    }

    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    fn band(&self) -> f64 {
        self.options.band.unwrap_or_else(|| default_band(self.n()))
    }

    fn lattice(&self) -> &Lattice {
        &self.kernel.field().lattice
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solvable: Verdict,
    pub u: Option<GridFunction>,
    pub j: Option<i64>,
    pub k: Option<i64>,
    pub nu: Option<Complex64>,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub iterations: usize,
    /// Maximum deviation of the sampled boundary offsets from their mean.
    pub offset_constancy: f64,
    pub min_abs_u: f64,
    pub notes: Vec<String>,
    /// `u = C exp(2 pi i m Z + v)` with `m = exp_k`, when available.
    pub exp_k: Option<i64>,
    pub v: Option<GridFunction>,
    /// Per-`k` outcome of the fixed-point search (only for `Lu = Au + B conj(u)`).
    pub candidates: Vec<KCandidate>,
}

/// Summary of the fixed-point computation for one `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KCandidate {
    pub k: i64,
    pub converged: bool,
    pub iterations: usize,
    pub defect: f64,
    pub q: Complex64,
    pub lattice_passed: bool,
}

impl SolveReport {
    fn empty(solvable: Verdict) -> Self {
        Self {
            solvable,
            u: None,
            j: None,
            k: None,
            nu: None,
            residual_sup: 0.0,
            residual_l2: 0.0,
            iterations: 0,
            offset_constancy: 0.0,
            min_abs_u: 0.0,
            notes: Vec::new(),
            exp_k: None,
            v: None,
            candidates: Vec::new(),
        }
    }

    fn set_residual(&mut self, r: &ResidualReport) {
        self.residual_sup = r.sup_norm;
        self.residual_l2 = r.l2_norm;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointState {
    pub k: i64,
    pub v: GridFunction,
    /// Size of the last damped update.
    pub delta_sup: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `|| v - P_k v ||_sup` at the returned `v`.
    pub defect: f64,
}

/// `h^2 sum g` over the cells.
pub fn mean_integral(g: &GridFunction) -> Complex64 {
    let h2 = g.h() * g.h();
    g.values().iter().sum::<Complex64>() * h2
}

/// `Lu = f`: solvable iff `int f = 0`, with `u = T_omega f`.
pub fn solve_f(ctx: &SolveContext, f: &GridFunction) -> Result<SolveReport> {
    let mean = mean_integral(f);
    let threshold = MEAN_TOL * (1.0 + f.sup_norm());
    if mean.norm() > threshold {
        let mut rep = SolveReport::empty(Verdict::No);
        rep.notes.push(format!(
            "|int f| = {:.3e} exceeds {threshold:.3e}",
            mean.norm()
        ));
        return Ok(rep);
    }
    let u = ctx.kernel.apply(f)?;
    let lu = apply_l_fd(ctx.kernel.field(), &u)?;
    let r = residual_report(ctx.kernel.field(), &lu, f, ctx.band())?;
    let mut rep = SolveReport::empty(Verdict::Yes);
    rep.set_residual(&r);
    rep.min_abs_u = min_abs(&u);
    rep.notes.push(format!(
        "residual measured on {:.1}% of the grid",
        100.0 * (1.0 - r.excluded_fraction)
    ));
    rep.u = Some(u);
    Ok(rep)
}

/// The two expressions of `nu(A)` and their discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuEstimate {
    /// `-(1/2 pi i) int A`.
    pub nu: Complex64,
    /// `(T A(0,1) - T A(0,0)) / 2 pi i`.
    pub boundary: Complex64,
    pub discrepancy: f64,
}

pub fn nu_of(ctx: &SolveContext, a_fn: &GridFunction) -> Result<NuEstimate> {
    let nu = -mean_integral(a_fn) / TWO_PI_I;
    let top = ctx.kernel.apply_at(a_fn, TorusPoint::new(0.0, 1.0))?;
    let bottom = ctx.kernel.apply_at(a_fn, TorusPoint::new(0.0, 0.0))?;
    let boundary = (top - bottom) / TWO_PI_I;
    Ok(NuEstimate {
        nu,
        boundary,
        discrepancy: (nu - boundary).norm(),
    })
}

/// `(j, k)` with `nu = j + k tau` when both coordinates are within `tol` of
/// integers.
pub fn lattice_project(nu: Complex64, lattice: &Lattice, tol: f64) -> Option<(i64, i64)> {
    let tau = lattice.tau();
    let k_real = nu.im / tau.im;
    let j_real = nu.re - k_real * tau.re;
    let (j, k) = (j_real.round(), k_real.round());
    if (j_real - j).abs() <= tol && (k_real - k).abs() <= tol {
        Some((j as i64, k as i64))
    } else {
        None
    }
}

fn min_abs(u: &GridFunction) -> f64 {
    u.values()
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min)
}

/// `exp(E)` scaled so that the largest modulus is one.
fn normalized_exp(e: &GridFunction) -> GridFunction {
    let m = e
        .values()
        .iter()
        .map(|v| v.re)
        .fold(f64::NEG_INFINITY, f64::max);
    e.map(|v| (v - m).exp())
}

fn is_zero(g: &GridFunction) -> bool {
    g.values().iter().all(|v| *v == Complex64::new(0.0, 0.0))
}

fn boundary_abscissae() -> impl Iterator<Item = f64> {
    (0..OFFSET_SAMPLES).map(|i| (i as f64 + 0.5) / OFFSET_SAMPLES as f64)
}

/// Samples `T g(x, 1) - T g(x, 0)`; returns their mean and maximum deviation.
fn boundary_offsets(ctx: &SolveContext, g: &GridFunction) -> Result<(Complex64, f64)> {
    let samples = boundary_abscissae()
        .map(|x| {
            let top = ctx.kernel.apply_at(g, TorusPoint::new(x, 1.0))?;
            let bottom = ctx.kernel.apply_at(g, TorusPoint::new(x, 0.0))?;
            Ok(top - bottom)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
    let dev = samples
        .iter()
        .map(|s| (s - mean).norm())
        .fold(0.0, f64::max);
    Ok((mean, dev))
}

/// `Lu = Au`: solvable iff `nu(A)` lies in the lattice, with
/// `u = exp(T_omega A - 2 pi i k Z)`.
pub fn solve_a(ctx: &SolveContext, a_fn: &GridFunction) -> Result<SolveReport> {
    let est = nu_of(ctx, a_fn)?;
    let tol = ctx.options.lattice_tol;
    let mut notes = vec![format!(
        "nu by mean {:.6e}{:+.6e}i, by boundary formula {:.6e}{:+.6e}i (discrepancy {:.3e})",
        est.nu.re, est.nu.im, est.boundary.re, est.boundary.im, est.discrepancy
    )];
    let Some((j, k)) = lattice_project(est.nu, ctx.lattice(), tol) else {
        let mut rep = SolveReport::empty(Verdict::No);
        rep.nu = Some(est.nu);
        notes.push(format!("nu is not within {tol:e} of the lattice Z + tau Z"));
        rep.notes = notes;
        return Ok(rep);
    };
    let v = ctx.kernel.apply(a_fn)?;
    let z = ctx.kernel.z_grid();
    let exponent = v.zip_map(&z, |t, z| t - TWO_PI_I * k as f64 * z)?;
    let u = normalized_exp(&exponent);

    // shifts of the exponent over one period: 2 pi i j in y, -2 pi i k in x
    let (offset, constancy) = boundary_offsets(ctx, a_fn)?;
    let gauge = (offset - TWO_PI_I * k as f64 * ctx.lattice().tau() - TWO_PI_I * j as f64).norm();
    notes.push(format!(
        "period shift of exponent in y deviates from 2 pi i j by {gauge:.3e}"
    ));

    let lu = apply_l_fd(ctx.kernel.field(), &u)?;
    let au = a_fn.zip_map(&u, |a, u| a * u)?;
    let r = residual_report(ctx.kernel.field(), &lu, &au, ctx.band())?;
    let mut rep = SolveReport::empty(Verdict::Yes);
    rep.set_residual(&r);
    rep.j = Some(j);
    rep.k = Some(k);
    rep.nu = Some(est.nu);
    rep.offset_constancy = constancy;
    rep.min_abs_u = min_abs(&u);
    rep.exp_k = Some(-k);
    rep.v = Some(v);
    rep.u = Some(u);
    rep.notes = notes;
    Ok(rep)
}

/// `B exp(-2 pi i k (Z + conj Z))` on the grid.
fn b_tilde(ctx: &SolveContext, b_fn: &GridFunction, k: i64) -> Result<GridFunction> {
    let z = ctx.kernel.z_grid();
    b_fn.zip_map(&z, |b, z| b * (-TWO_PI_I * k as f64 * (z + z.conj())).exp())
}

fn pk_integrand(a_fn: &GridFunction, bt: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    let phase = bt.zip_map(v, |b, v| b * (v.conj() - v).exp())?;
    a_fn.add(&phase)
}

/// `P_k v = T_omega[A + B_k exp(conj(v) - v)]`.
pub fn pk_apply(
    ctx: &SolveContext,
    a_fn: &GridFunction,
    b_fn: &GridFunction,
    k: i64,
    v: &GridFunction,
) -> Result<GridFunction> {
    let bt = b_tilde(ctx, b_fn, k)?;
    ctx.kernel.apply(&pk_integrand(a_fn, &bt, v)?)
}

/// Damped Picard iteration `v <- (1 - d) v + d P_k v` from `v = 0`.
pub fn pk_fixed_point(
    ctx: &SolveContext,
    a_fn: &GridFunction,
    b_fn: &GridFunction,
    k: i64,
    damping: f64,
    max_iter: usize,
    picard_tol: f64,
) -> Result<FixedPointState> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping {damping} must lie in (0, 1]"
        )));
    }
    let n = a_fn.n();
    a_fn.check_same(b_fn)?;
    let bt = b_tilde(ctx, b_fn, k)?;
    let apply = |v: &GridFunction| ctx.kernel.apply(&pk_integrand(a_fn, &bt, v)?);

    if is_zero(b_fn) {
        // P_k is constant: its value is the fixed point
        let v = apply(&GridFunction::zeros(n)?)?;
        let defect = apply(&v)?.sub(&v)?.sup_norm();
        return Ok(FixedPointState {
            k,
            v,
            delta_sup: defect,
            converged: defect <= picard_tol,
            iterations: 2,
            defect,
        });
    }

    let mut v = GridFunction::zeros(n)?;
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let pv = apply(&v)?;
        let next = v.zip_map(&pv, |a, b| a * (1.0 - damping) + b * damping)?;
        delta = next.sub(&v)?.sup_norm();
        v = next;
        iterations += 1;
        if delta <= picard_tol {
            converged = true;
            break;
        }
    }
    let defect = apply(&v)?.sub(&v)?.sup_norm();
    Ok(FixedPointState {
        k,
        v,
        delta_sup: delta,
        converged,
        iterations,
        defect,
    })
}

/// Order in which candidate `k` are tried: `0, 1, -1, 2, -2, ...`.
pub fn k_search_order(k_max: usize) -> Vec<i64> {
    let mut ks = vec![0];
    for k in 1..=k_max as i64 {
        ks.push(k);
        ks.push(-k);
    }
    ks
}

struct Candidate {
    state: FixedPointState,
    delta: Complex64,
    lattice: Option<i64>,
    constancy: f64,
}

/// `Lu = Au + B conj(u)` by searching `k` and computing a fixed point of `P_k`.
pub fn solve_ab(
    ctx: &SolveContext,
    a_fn: &GridFunction,
    b_fn: &GridFunction,
    k_max: usize,
) -> Result<SolveReport> {
    a_fn.check_same(b_fn)?;
    let opts = &ctx.options;
    let b_zero = is_zero(b_fn);
    let tau = ctx.lattice().tau();
    let candidates = k_search_order(k_max)
        .into_par_iter()
        .map(|k| -> Result<Candidate> {
            let state = pk_fixed_point(
                ctx,
                a_fn,
                b_fn,
                k,
                opts.damping,
                opts.max_iter,
                opts.picard_tol,
            )?;
            let bt = b_tilde(ctx, b_fn, k)?;
            let g = pk_integrand(a_fn, &bt, &state.v)?;
            let delta = -mean_integral(&g);
            let q = delta / TWO_PI_I;
            let tol = if b_zero {
                opts.lattice_tol
            } else {
                SCALED_LATTICE_TOL * (1.0 + q.norm())
            };
            let k_real = q.im / tau.im;
            let j_real = q.re + k as f64 * tau.re;
            let lattice = ((k_real + k as f64).abs() <= tol
                && (j_real - j_real.round()).abs() <= tol)
                .then(|| j_real.round() as i64);
            let constancy = if state.converged {
                boundary_offsets(ctx, &g)?.1
            } else {
                f64::NAN
            };
            Ok(Candidate {
                state,
                delta,
                lattice,
                constancy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut notes = Vec::new();
    for c in &candidates {
        notes.push(format!(
            "k={}: {} after {} iterations (update {:.2e}, defect {:.2e}), delta/(2 pi i) = {:.6e}{:+.6e}i{}",
            c.state.k,
            if c.state.converged { "converged" } else { "not converged" },
            c.state.iterations,
            c.state.delta_sup,
            c.state.defect,
            (c.delta / TWO_PI_I).re,
            (c.delta / TWO_PI_I).im,
            if c.lattice.is_some() { ", lattice test passed" } else { "" }
        ));
    }

    let summaries: Vec<KCandidate> = candidates
        .iter()
        .map(|c| KCandidate {
            k: c.state.k,
            converged: c.state.converged,
            iterations: c.state.iterations,
            defect: c.state.defect,
            q: c.delta / TWO_PI_I,
            lattice_passed: c.lattice.is_some(),
        })
        .collect();
    let chosen = candidates
        .iter()
        .find(|c| c.state.converged && c.lattice.is_some());
    let Some(c) = chosen else {
        let all_converged = candidates.iter().all(|c| c.state.converged);
        let verdict = if all_converged {
            notes.push(format!(
                "no k in [-{k_max}, {k_max}] passed the lattice test with the computed fixed points"
            ));
            Verdict::No
        } else {
            Verdict::Inconclusive
        };
        let mut rep = SolveReport::empty(verdict);
        rep.nu = candidates.first().map(|c| c.delta / TWO_PI_I);
        rep.iterations = candidates
            .iter()
            .map(|c| c.state.iterations)
            .max()
            .unwrap_or(0);
        rep.notes = notes;
        rep.candidates = summaries;
        return Ok(rep);
    };

    let k = c.state.k;
    let z = ctx.kernel.z_grid();
    let exponent = c.state.v.zip_map(&z, |v, z| TWO_PI_I * k as f64 * z + v)?;
    let u = normalized_exp(&exponent);
    let lu = apply_l_fd(ctx.kernel.field(), &u)?;
    let rhs = a_fn
        .zip_map(&u, |a, u| a * u)?
        .add(&b_fn.zip_map(&u, |b, u| b * u.conj())?)?;
    let r = residual_report(ctx.kernel.field(), &lu, &rhs, ctx.band())?;
    let mut rep = SolveReport::empty(Verdict::Yes);
    rep.set_residual(&r);
    rep.j = c.lattice;
    rep.k = Some(k);
    rep.nu = Some(c.delta / TWO_PI_I);
    rep.iterations = c.state.iterations;
    rep.offset_constancy = c.constancy;
    rep.min_abs_u = min_abs(&u);
    rep.exp_k = Some(k);
    rep.v = Some(c.state.v.clone());
    rep.u = Some(u);
    rep.notes = notes;
    rep.candidates = summaries;
    Ok(rep)
}

/// Result of the similarity check `u = C exp(2 pi i k Z + v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub c: Complex64,
    pub max_dev: f64,
    pub min_abs_u: f64,
}

pub fn similarity_check(
    ctx: &SolveContext,
    u: &GridFunction,
    k: i64,
    v: &GridFunction,
) -> Result<Similarity> {
    let z = ctx.kernel.z_grid();
    let e = v.zip_map(&z, |v, z| TWO_PI_I * k as f64 * z + v)?;
    let ratio = u.zip_map(&e, |u, e| u * (-e).exp())?;
    let c = ratio.mean();
    if c.norm() < 1e-12 {
        return Err(Error::DegenerateCheck(c.norm()));
    }
    let max_dev = ratio
        .values()
        .iter()
        .map(|r| (r - c).norm())
        .fold(0.0, f64::max)
        / c.norm();
    Ok(Similarity {
        c,
        max_dev,
        min_abs_u: min_abs(u),
    })
}
