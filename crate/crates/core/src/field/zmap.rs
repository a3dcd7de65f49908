//! Fast evaluation of the normalised first integral on the whole plane.

use num_complex::Complex64;

use super::NormalizedField;
use crate::error::Result;
use crate::expr::{symbolic_diff, Expr, Var};
use crate::lattice::TorusPoint;
use crate::quad::gl16;

/// Node count per unit length of the interpolation table.
const TABLE_N: usize = 256;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
enum Backend {
    Exact,
    /// Bicubic Hermite data `(Z, Z_x, Z_y, Z_xy)` on a `(N+1)^2` node grid.
    Table(Vec<[Complex64; 4]>),
}

/// First integral `Z` with the quasi-periodic extension
/// `Z(p + (j, k)) = Z(p) + j + k tau`.
///
/// Uses the closed form when the field supplies one and a Hermite table
/// built by Gauss-Legendre integration otherwise.
#[derive(Debug, Clone)]
pub struct ZMap {
    nf: NormalizedField,
    backend: Backend,
}

impl ZMap {
    pub fn new(nf: &NormalizedField) -> Result<Self> {
        let backend = if nf.has_exact() {
            Backend::Exact
        } else {
            Backend::Table(build_table(nf)?)
        };
        Ok(Self {
            nf: nf.clone(),
            backend,
        })
    }

    pub fn field(&self) -> &NormalizedField {
        &self.nf
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.backend, Backend::Exact)
    }

    /// `Z(p)` for any point of the plane.
    pub fn eval(&self, p: TorusPoint) -> Result<Complex64> {
        let (r, j, k) = p.reduce();
        let base = match &self.backend {
            Backend::Exact => self.nf.exact_first_integral(r).expect("exact backend")?,
            Backend::Table(t) => hermite(t, r.x, r.y),
        };
        Ok(base + self.nf.lattice.point(j, k))
    }

    /// Normalised coefficients `(a, b) = (Z_x, Z_y)` at `p`.
    pub fn coeffs(&self, p: TorusPoint) -> Result<(Complex64, Complex64)> {
        self.nf.coeffs(p.x, p.y)
    }

    pub fn coeff_a(&self, p: TorusPoint) -> Result<Complex64> {
        self.nf.coeff_a(p.x, p.y)
    }

    pub fn coeff_b(&self, p: TorusPoint) -> Result<Complex64> {
        self.nf.coeff_b(p.x, p.y)
    }
}

fn build_table(nf: &NormalizedField) -> Result<Vec<[Complex64; 4]>> {
    let n = TABLE_N;
    let h = 1.0 / n as f64;
    let (nodes, weights) = gl16();
    let a_y = derivative_of_a(nf);

    let seg = |f: &dyn Fn(f64) -> Result<Complex64>, lo: f64| -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in nodes.iter().zip(weights) {
            acc += f(lo + 0.5 * h * (1.0 + x))? * *w;
        }
        Ok(acc * (0.5 * h))
    };

    let mut bottom = vec![Complex64::new(0.0, 0.0); n + 1];
    for i in 1..=n {
        let lo = (i - 1) as f64 * h;
        bottom[i] = bottom[i - 1] + seg(&|t| Ok(nf.coeffs(t, 0.0)?.0), lo)?;
    }
    let mut table = vec![[Complex64::new(0.0, 0.0); 4]; (n + 1) * (n + 1)];
    for i in 0..=n {
        let x = i as f64 * h;
        let mut z = bottom[i];
        for j in 0..=n {
            let y = j as f64 * h;
            if j > 0 {
                z += seg(&|t| Ok(nf.coeffs(x, t)?.1), (j - 1) as f64 * h)?;
            }
            let (a, b) = nf.coeffs(x, y)?;
            table[i * (n + 1) + j] = [z, a, b, a_y(x, y)?];
        }
    }
    Ok(table)
}

/// `d a / d y` for the normalised coefficient, symbolic when possible.
fn derivative_of_a(nf: &NormalizedField) -> Box<dyn Fn(f64, f64) -> Result<Complex64> + '_> {
    let sign = if nf.flip_y { -1.0 } else { 1.0 };
    match symbolic_diff(&nf.base.a, Var::Y) {
        Ok(d) => {
            let d: Expr = d;
            Box::new(move |x, y| Ok(d.eval(x, sign * y)? * nf.scale * sign))
        }
        Err(_) => Box::new(move |x, y| {
            let up = nf.coeffs(x, y + FD_STEP)?.0;
            let down = nf.coeffs(x, y - FD_STEP)?.0;
            Ok((up - down) / (2.0 * FD_STEP))
        }),
    }
}

fn hermite(table: &[[Complex64; 4]], x: f64, y: f64) -> Complex64 {
    let n = TABLE_N;
    let h = 1.0 / n as f64;
    let fx = (x * n as f64).clamp(0.0, n as f64);
    let fy = (y * n as f64).clamp(0.0, n as f64);
    let i = (fx.floor() as usize).min(n - 1);
    let j = (fy.floor() as usize).min(n - 1);
    let t = fx - i as f64;
    let u = fy - j as f64;

    let basis = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (
            [2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2],
            [s3 - 2.0 * s2 + s, s3 - s2],
        )
    };
    let (h0t, h1t) = basis(t);
    let (h0u, h1u) = basis(u);
    let mut acc = Complex64::new(0.0, 0.0);
    for di in 0..2 {
        for dj in 0..2 {
            let [z, zx, zy, zxy] = table[(i + di) * (n + 1) + j + dj];
            acc += z * (h0t[di] * h0u[dj])
                + zx * (h * h1t[di] * h0u[dj])
                + zy * (h * h0t[di] * h1u[dj])
                + zxy * (h * h * h1t[di] * h1u[dj]);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::field::{normalize, FieldSpec};

    fn without_exact(name: &str) -> FieldSpec {
        let mut spec = FieldSpec::builtin(name).unwrap();
        spec.z_exact = None;
        spec
    }

    #[test]
    fn table_matches_closed_form() {
        for name in ["analytic_perturbed", "degenerate_2d", "degenerate_sin2"] {
            let exact = ZMap::new(&normalize(&FieldSpec::builtin(name).unwrap()).unwrap()).unwrap();
            let table = ZMap::new(&normalize(&without_exact(name)).unwrap()).unwrap();
            assert!(exact.is_exact() && !table.is_exact());
            for k in 0..40 {
                let p = TorusPoint::new(0.37 * k as f64 % 1.3 - 0.1, 0.71 * k as f64 % 2.1 - 0.5);
                let d = (exact.eval(p).unwrap() - table.eval(p).unwrap()).norm();
                assert!(d < 1e-8, "{name} {p:?} {d:e}");
            }
        }
    }

    #[test]
    fn quasi_periods() {
        let spec = FieldSpec::new(
            "flip",
            parse_expr("1").unwrap(),
            parse_expr("-i*(1 + 0.5*cos(2*pi*y))").unwrap(),
        );
        let nf = normalize(&spec).unwrap();
        assert!(nf.flip_y);
        let zm = ZMap::new(&nf).unwrap();
        let p = TorusPoint::new(0.3, 0.2);
        let z = zm.eval(p).unwrap();
        assert!((zm.eval(p.shifted(1, 0)).unwrap() - z - 1.0).norm() < 1e-12);
        assert!((zm.eval(p.shifted(-2, 1)).unwrap() - z + 2.0 - nf.tau()).norm() < 1e-12);
        let q = nf
            .first_integral_quadrature(p, super::super::PathOrder::XThenY)
            .unwrap();
        assert!((q - z).norm() < 1e-9);
    }
}
