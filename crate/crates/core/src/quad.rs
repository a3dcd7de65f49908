//! Composite Gauss-Legendre quadrature on intervals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Fixed composite 16-point rule with `panels` equal panels on `[a, b]`.
pub fn composite(
    f: &mut impl FnMut(f64) -> Result<Complex64>,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<Complex64> {
    let (nodes, weights) = gl16();
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in nodes.iter().zip(weights) {
            acc += f(mid + 0.5 * h * x)? * *w;
        }
    }
    Ok(acc * (0.5 * h))
}

pub const START_PANELS_PER_UNIT: usize = 8;
pub const PANEL_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 12;

/// Integral of `f` over `[a, b]` split at `breaks`, with panel doubling until
/// successive estimates agree to [`PANEL_TOL`].
pub fn integrate(
    mut f: impl FnMut(f64) -> Result<Complex64>,
    a: f64,
    b: f64,
    breaks: &[f64],
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&t| t > lo && t < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(hi);

    let mut total = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if e - s <= 0.0 {
            continue;
        }
        let mut panels = ((e - s) * START_PANELS_PER_UNIT as f64).ceil().max(1.0) as usize;
        let mut prev = composite(&mut f, s, e, panels)?;
        let mut converged = false;
        for _ in 0..MAX_DOUBLINGS {
            panels *= 2;
            let next = composite(&mut f, s, e, panels)?;
            let diff = (next - prev).norm();
            prev = next;
            if diff <= PANEL_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!(
                "quadrature on [{s}, {e}] did not stabilise after {MAX_DOUBLINGS} panel doublings"
            )));
        }
        total += prev;
    }
    Ok(total * sign)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in [2, 10, 30] {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14, "{deg}");
        }
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn integrate_with_breaks() {
        let v = integrate(
            |t| {
                Ok(Complex64::new(
                    (std::f64::consts::PI * t).sin().powi(2),
                    0.0,
                ))
            },
            0.0,
            1.0,
            &[0.5],
        )
        .unwrap();
        assert!((v.re - 0.5).abs() < 1e-12);
        let v = integrate(
            |t| Ok(Complex64::new(t.abs().powf(2.5), 0.0)),
            1.0,
            -1.0,
            &[0.0],
        )
        .unwrap();
        assert!((v.re + 2.0 / 3.5).abs() < 1e-11);
    }
}
