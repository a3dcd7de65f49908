//! Finite-difference application of `L` and residual bookkeeping.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::NormalizedField;
use crate::grid::GridFunction;
use crate::kernel::KernelContext;
use crate::lattice::TorusPoint;
use crate::solvers::mean_integral;

/// Default exclusion band around declared characteristic curves, in cells.
pub const BAND_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub sup_norm: f64,
    pub l2_norm: f64,
    /// Fraction of grid points inside the exclusion band.
    pub excluded_fraction: f64,
    pub n: usize,
}

/// `(L u)_{ij} = b (u_{i+1,j} - u_{i-1,j}) / 2h - a (u_{i,j+1} - u_{i,j-1}) / 2h`
/// with periodic wraparound.
pub fn apply_l_fd(nf: &NormalizedField, u: &GridFunction) -> Result<GridFunction> {
    let zero = Complex64::new(0.0, 0.0);
    apply_l_fd_quasi(nf, u, zero, zero)
}

/// As [`apply_l_fd`] for grids of a function with
/// `u(x + 1, y) = u + jump_x` and `u(x, y + 1) = u + jump_y`.
pub fn apply_l_fd_quasi(
    nf: &NormalizedField,
    u: &GridFunction,
    jump_x: Complex64,
    jump_y: Complex64,
) -> Result<GridFunction> {
    let n = u.n();
    let ni = n as i64;
    let h = u.h();
    let at = |i: i64, j: i64| {
        let wx = i.div_euclid(ni) as f64;
        let wy = j.div_euclid(ni) as f64;
        u.get_wrapped(i, j) + jump_x * wx + jump_y * wy
    };
    let values = (0..n * n)
        .into_par_iter()
        .map(|c| {
            let (i, j) = ((c / n) as i64, (c % n) as i64);
            let p = u.point(i as usize, j as usize);
            let (a, b) = nf.coeffs(p.x, p.y)?;
            let dx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
            let dy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
            Ok(b * dx - a * dy)
        })
        .collect::<Result<Vec<Complex64>>>()?;
    GridFunction::new(n, values)
}

/// Default band width `4/n`.
pub fn default_band(n: usize) -> f64 {
    BAND_CELLS / n as f64
}

/// Grid indices at distance greater than `band` from every declared curve.
pub fn included_mask(nf: &NormalizedField, n: usize, band: f64) -> Vec<bool> {
    let g = crate::grid::cell_center;
    (0..n * n)
        .map(|c| {
            let p = g(n, c / n, c % n);
            nf.sigma_distance(p).is_none_or(|d| d > band)
        })
        .collect()
}

/// Norms of `lhs - rhs` over grid points outside the band.
pub fn residual_report(
    nf: &NormalizedField,
    lhs: &GridFunction,
    rhs: &GridFunction,
    band: f64,
) -> Result<ResidualReport> {
    lhs.check_same(rhs)?;
    if !(band >= 0.0) {
        return Err(Error::InvalidArgument(format!("band {band} must be >= 0")));
    }
    let n = lhs.n();
    let mask = included_mask(nf, n, band);
    let mut sup = 0.0f64;
    let mut sq = 0.0;
    let mut excluded = 0usize;
    for (c, keep) in mask.iter().enumerate() {
        if !keep {
            excluded += 1;
            continue;
        }
        let d = (lhs.values()[c] - rhs.values()[c]).norm();
        sup = sup.max(d);
        sq += d * d;
    }
    Ok(ResidualReport {
        sup_norm: sup,
        l2_norm: (sq * lhs.h() * lhs.h()).sqrt(),
        excluded_fraction: excluded as f64 / (n * n) as f64,
        n,
    })
}

/// Sup of `u - w - c` over masked points, `c` the least-squares constant.
pub fn error_mod_additive(u: &GridFunction, w: &GridFunction, mask: &[bool]) -> Result<f64> {
    u.check_same(w)?;
    let diffs: Vec<Complex64> = u
        .values()
        .iter()
        .zip(w.values())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((u, w), _)| u - w)
        .collect();
    if diffs.is_empty() {
        return Err(Error::InvalidArgument("mask excludes every point".into()));
    }
    let c = diffs.iter().sum::<Complex64>() / diffs.len() as f64;
    Ok(diffs.iter().map(|d| (d - c).norm()).fold(0.0, f64::max))
}

/// Relative sup error of `u` against `c exp(w)` over masked points, `c` the
/// least-squares multiplier.
pub fn error_mod_multiplicative(u: &GridFunction, w: &GridFunction, mask: &[bool]) -> Result<f64> {
    u.check_same(w)?;
    let pairs: Vec<(Complex64, Complex64)> = u
        .values()
        .iter()
        .zip(w.values())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((u, w), _)| (*u, w.exp()))
        .collect();
    let den: f64 = pairs.iter().map(|(_, e)| e.norm_sqr()).sum();
    if pairs.is_empty() || den == 0.0 {
        return Err(Error::InvalidArgument("mask excludes every point".into()));
    }
    let c = pairs.iter().map(|(u, e)| e.conj() * u).sum::<Complex64>() / den;
    let scale = pairs
        .iter()
        .map(|(_, e)| (c * e).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateCheck(0.0));
    }
    let err = pairs
        .iter()
        .map(|(u, e)| (u - c * e).norm())
        .fold(0.0, f64::max);
    Ok(err / scale)
}

/// Deviations of `T_omega P` from its quasi-periodicity and inversion laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorCheck {
    pub integral: Complex64,
    /// `max |T P(x + 1, y) - T P(x, y)|` over the sample points.
    pub period_x: f64,
    /// `max |T P(x, y + 1) - T P(x, y) + int P|` over the sample points.
    pub period_y: f64,
    /// FD residual of `L T P - P` outside the band, when requested.
    pub inversion: Option<ResidualReport>,
}

/// Points at which the quasi-periodicity laws are sampled.
pub const OPERATOR_SAMPLE_POINTS: [(f64, f64); 4] =
    [(0.125, 0.5), (0.375, 0.25), (0.625, 0.75), (0.875, 0.4)];

/// Checks the laws of `T_omega` for each grid function in `ps`.
pub fn operator_check(
    ctx: &KernelContext,
    ps: &[&GridFunction],
    inversion_band: Option<f64>,
) -> Result<Vec<OperatorCheck>> {
    let mut dx = vec![0.0f64; ps.len()];
    let mut dy = vec![0.0f64; ps.len()];
    let integrals: Vec<Complex64> = ps.iter().map(|p| mean_integral(p)).collect();
    for (x, y) in OPERATOR_SAMPLE_POINTS {
        let p = TorusPoint::new(x, y);
        let base = ctx.apply_at_many(ps, p)?;
        let right = ctx.apply_at_many(ps, p.shifted(1, 0))?;
        let up = ctx.apply_at_many(ps, p.shifted(0, 1))?;
        for k in 0..ps.len() {
            dx[k] = dx[k].max((right[k] - base[k]).norm());
            dy[k] = dy[k].max((up[k] - base[k] + integrals[k]).norm());
        }
    }
    let inversion = match inversion_band {
        Some(band) => {
            let tp = ctx.apply_many(ps)?;
            let zero = Complex64::new(0.0, 0.0);
            tp.iter()
                .zip(ps)
                .zip(&integrals)
                .map(|((t, p), i)| {
                    let lt = apply_l_fd_quasi(ctx.field(), t, zero, -i)?;
                    residual_report(ctx.field(), &lt, p, band).map(Some)
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => vec![None; ps.len()],
    };
    Ok((0..ps.len())
        .map(|k| OperatorCheck {
            integral: integrals[k],
            period_x: dx[k],
            period_y: dy[k],
            inversion: inversion[k],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_norm: f64,
    pub l2_norm: f64,
    /// `sup` at the previous size divided by `sup` at this size.
    pub ratio: Option<f64>,
}

/// Runs `case` at each size and tabulates the error norms and their ratios.
pub fn convergence_study(
    sizes: &[usize],
    mut case: impl FnMut(usize) -> Result<ResidualReport>,
) -> Result<Vec<ConvergenceRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no sizes given".into()));
    }
    if sizes.iter().any(|&n| n < 16) {
        return Err(Error::InvalidArgument(
            "every size must be at least 16".into(),
        ));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "sizes must be strictly increasing".into(),
        ));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let r = case(n)?;
        let ratio = rows.last().map(|prev| {
            if r.sup_norm == 0.0 {
                f64::INFINITY
            } else {
                prev.sup_norm / r.sup_norm
            }
        });
        rows.push(ConvergenceRow {
            n,
            sup_norm: r.sup_norm,
            l2_norm: r.l2_norm,
            ratio,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{normalize, FieldSpec};
    use std::f64::consts::PI;

    fn nf(name: &str) -> NormalizedField {
        normalize(&FieldSpec::builtin(name).unwrap()).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        let f = nf("degenerate_2d");
        let u = GridFunction::constant(32, Complex64::new(2.0, -1.0)).unwrap();
        assert_eq!(apply_l_fd(&f, &u).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn fourier_symbol() {
        let f = nf("elliptic");
        let u = GridFunction::from_fn(64, |x, y| Complex64::new(0.0, 2.0 * PI * (x + y)).exp())
            .unwrap();
        let lu = apply_l_fd(&f, &u).unwrap();
        let expect = u.scale(-2.0 * PI * Complex64::new(1.0, 1.0));
        let rel = lu.sub(&expect).unwrap().sup_norm() / expect.sup_norm();
        assert!(rel <= 1e-2, "{rel}");
    }

    #[test]
    fn first_integral_is_in_the_kernel() {
        use crate::lattice::TorusPoint;
        for name in ["analytic_perturbed", "degenerate_2d"] {
            let f = nf(name);
            let mut prev = f64::INFINITY;
            for n in [32, 64] {
                // Z - x - tau y is periodic and L(x + tau y) = b - a tau
                let per = GridFunction::try_from_fn(n, |x, y| {
                    Ok(f.first_integral(TorusPoint::new(x, y))? - x - f.tau() * y)
                })
                .unwrap();
                let expect = GridFunction::try_from_fn(n, |x, y| {
                    let (a, b) = f.coeffs(x, y)?;
                    Ok(a * f.tau() - b)
                })
                .unwrap();
                let r = apply_l_fd(&f, &per)
                    .unwrap()
                    .sub(&expect)
                    .unwrap()
                    .sup_norm();
                assert!(r < prev && r < 0.05, "{name} n={n} {r}");
                prev = r;
            }
        }
    }

    #[test]
    fn band_fractions() {
        let f = nf("elliptic");
        let u = GridFunction::zeros(64).unwrap();
        let r = residual_report(&f, &u, &u, default_band(64)).unwrap();
        assert_eq!(r.excluded_fraction, 0.0);
        assert_eq!(r.sup_norm, 0.0);
        let f = nf("degenerate_sin2");
        let r = residual_report(&f, &u, &u, default_band(64)).unwrap();
        assert_eq!(r.excluded_fraction, 8.0 / 64.0);
    }

    #[test]
    fn convergence_table() {
        let rows = convergence_study(&[16, 32], |n| {
            Ok(ResidualReport {
                sup_norm: 1.0 / (n * n) as f64,
                l2_norm: 0.0,
                excluded_fraction: 0.0,
                n,
            })
        })
        .unwrap();
        assert_eq!(rows[0].ratio, None);
        assert!((rows[1].ratio.unwrap() - 4.0).abs() < 1e-12);
        assert!(convergence_study(&[32, 16], |_| unreachable!()).is_err());
        assert!(convergence_study(&[8], |_| unreachable!()).is_err());
    }
}
