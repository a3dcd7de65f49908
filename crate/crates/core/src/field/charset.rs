//! Diagnostics of the characteristic set `{Im(a conj(b)) = 0}`.

use num_complex::Complex64;

use super::{CharCurve, FieldSpec, NormalizedField};
use crate::error::Result;
use crate::grid::cell_center;

/// Number of dyadic distances used for the vanishing-rate fit.
const RATE_SAMPLES: i32 = 8;
/// Allowed gap between the fitted and the declared order.
const RATE_MISMATCH: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub description: String,
    pub declared_sigma: f64,
    pub curve: Option<CharCurve>,
    /// Minimum of `|Im(a conj(b))|` over grid points at distance >= 1/16.
    pub min_off: f64,
    /// Mean fitted vanishing order across the sampled transversals.
    pub fitted_rate: Option<f64>,
    pub rate_min: Option<f64>,
    pub rate_max: Option<f64>,
    pub mismatch: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharSetReport {
    pub sigma_max: f64,
    /// Minimum of `|Im(a conj(b))|` over a 64x64 grid.
    pub min_abs_im_ab: f64,
    pub components: Vec<ComponentReport>,
}

fn im_ab(spec: &FieldSpec, x: f64, y: f64) -> Result<f64> {
    let (a, b) = spec.raw_coeffs(x, y)?;
    Ok((a * b.conj()).im)
}

/// Least-squares slope of `log v` against `log d`.
fn loglog_slope(samples: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(d, v)| *d > 0.0 && *v > 0.0)
        .map(|(d, v)| (d.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn char_set_info(spec: &FieldSpec) -> Result<CharSetReport> {
    let n = 64;
    let mut min_all = f64::INFINITY;
    let mut grid = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let p = cell_center(n, i, j);
            let v = im_ab(spec, p.x, p.y)?.abs();
            min_all = min_all.min(v);
            grid.push((p, v));
        }
    }

    let mut components = Vec::new();
    for comp in &spec.sigma_components {
        let curve = comp.curve();
        let min_off = grid
            .iter()
            .filter(|(p, _)| curve.is_none_or(|c| c.distance(*p) >= 1.0 / 16.0))
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        let mut rates = Vec::new();
        if let Some(c) = curve {
            for s in 0..8 {
                let along = (s as f64 + 0.5) / 8.0;
                let mut samples = Vec::new();
                for k in 3..3 + RATE_SAMPLES {
                    let d = 2f64.powi(-k);
                    let (x, y) = match c {
                        CharCurve::Horizontal(c) => (along, c + d),
                        CharCurve::Vertical(c) => (c + d, along),
                    };
                    samples.push((d, im_ab(spec, x, y)?.abs()));
                }
                if let Some(r) = loglog_slope(&samples) {
                    rates.push(r);
                }
            }
        }
        let (fitted, lo, hi) = if rates.is_empty() {
            (None, None, None)
        } else {
            let mean = rates.iter().sum::<f64>() / rates.len() as f64;
            let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (Some(mean), Some(lo), Some(hi))
        };
        let mismatch = rates.iter().any(|r| (r - comp.sigma).abs() > RATE_MISMATCH);
        components.push(ComponentReport {
            description: comp.description.clone(),
            declared_sigma: comp.sigma,
            curve,
            min_off,
            fitted_rate: fitted,
            rate_min: lo,
            rate_max: hi,
            mismatch,
        });
    }
    Ok(CharSetReport {
        sigma_max: spec.sigma_max(),
        min_abs_im_ab: min_all,
        components,
    })
}

/// Range `(min, max)` of `Im(a conj(b))` on an `n x n` cell-centred grid.
pub fn im_ab_range(spec: &FieldSpec, n: usize) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let p = cell_center(n, i, j);
            let v = im_ab(spec, p.x, p.y)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((lo, hi))
}

/// Minimum pairwise distance between the values of `Z` on an `n x n` grid.
///
/// A positive result is a necessary condition for `Z` to be injective on `R`.
pub fn injectivity_probe(nf: &NormalizedField, n: usize) -> Result<f64> {
    let mut zs: Vec<Complex64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            zs.push(nf.first_integral(cell_center(n, i, j))?);
        }
    }
    zs.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut best = f64::INFINITY;
    for i in 0..zs.len() {
        for j in i + 1..zs.len() {
            if zs[j].re - zs[i].re >= best {
                break;
            }
            best = best.min((zs[j] - zs[i]).norm());
        }
    }
    Ok(best)
}
