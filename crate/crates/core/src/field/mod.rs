//! Closed one-forms `omega = a dx + b dy` on the torus, their periods, the
//! normalisation to periods `(1, tau)` and the global first integral `Z`.

mod builtin;
mod charset;
mod zmap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::GridFunction;
use crate::lattice::{Lattice, TorusPoint};
use crate::quad;

pub use builtin::BUILTIN_NAMES;
pub use charset::{char_set_info, im_ab_range, injectivity_probe, CharSetReport, ComponentReport};
pub use zmap::ZMap;

/// Threshold on `|Im(C1 conj(C2))|` below which the form is rejected.
pub const HYPOCOMPLEX_TOL: f64 = 1e-10;

/// A characteristic curve `{y = c} + Z^2` or `{x = c} + Z^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CharCurve {
    Horizontal(f64),
    Vertical(f64),
}

impl CharCurve {
    /// Parses hints of the form `y=0.5` or `x = 0`.
    pub fn parse(hint: &str) -> Option<Self> {
        let (lhs, rhs) = hint.split_once('=')?;
        let c: f64 = rhs.trim().parse().ok()?;
        if !c.is_finite() {
            return None;
        }
        let c = c.rem_euclid(1.0);
        match lhs.trim() {
            "y" => Some(CharCurve::Horizontal(c)),
            "x" => Some(CharCurve::Vertical(c)),
            _ => None,
        }
    }

    /// Periodic distance from `p` to the curve.
    pub fn distance(&self, p: TorusPoint) -> f64 {
        let (t, c) = match *self {
            CharCurve::Horizontal(c) => (p.y, c),
            CharCurve::Vertical(c) => (p.x, c),
        };
        let d = (t - c).rem_euclid(1.0);
        d.min(1.0 - d)
    }

    /// Image under `y -> -y`.
    fn flipped(self) -> Self {
        match self {
            CharCurve::Horizontal(c) => CharCurve::Horizontal((-c).rem_euclid(1.0)),
            v => v,
        }
    }

    fn ordinate(&self) -> f64 {
        match *self {
            CharCurve::Horizontal(c) | CharCurve::Vertical(c) => c,
        }
    }
}

/// A declared connected component of the characteristic set.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaComponent {
    pub description: String,
    pub sigma: f64,
    pub hint: String,
}

impl SigmaComponent {
    pub fn new(description: impl Into<String>, sigma: f64, hint: impl Into<String>) -> Self {
        Self {
            description: description.into(),
            sigma,
            hint: hint.into(),
        }
    }

    pub fn curve(&self) -> Option<CharCurve> {
        CharCurve::parse(&self.hint)
    }
}

/// The raw one-form as supplied by the user or a builtin.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub a: Expr,
    pub b: Expr,
    pub z_exact: Option<Expr>,
    pub sigma_components: Vec<SigmaComponent>,
}

impl FieldSpec {
    pub fn new(name: impl Into<String>, a: Expr, b: Expr) -> Self {
        Self {
            name: name.into(),
            a,
            b,
            z_exact: None,
            sigma_components: Vec::new(),
        }
    }

    pub fn with_exact(mut self, z: Expr) -> Self {
        self.z_exact = Some(z);
        self
    }

    pub fn with_component(mut self, c: SigmaComponent) -> Self {
        self.sigma_components.push(c);
        self
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_components
            .iter()
            .map(|c| c.sigma)
            .fold(0.0, f64::max)
    }

    pub fn raw_coeffs(&self, x: f64, y: f64) -> Result<(Complex64, Complex64)> {
        Ok((self.a.eval(x, y)?, self.b.eval(x, y)?))
    }

    /// Samples double periodicity of the coefficients on a 32x32 grid and the
    /// non-vanishing of `omega` on a 64x64 grid.
    pub fn validate(&self) -> Result<()> {
        for c in &self.sigma_components {
            if !(c.sigma > 0.0 && c.sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "component `{}` has sigma = {} (must be > 0)",
                    c.description, c.sigma
                )));
            }
        }
        let n = 32;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
                let (a, b) = self.raw_coeffs(x, y)?;
                for (sx, sy) in [(1.0, 0.0), (0.0, 1.0)] {
                    let (a2, b2) = self.raw_coeffs(x + sx, y + sy)?;
                    let dev = (a2 - a).norm().max((b2 - b).norm());
                    if dev > 1e-10 {
                        return Err(Error::InvalidArgument(format!(
                            "coefficients of `{}` are not doubly periodic at ({x}, {y}): deviation {dev:e}",
                            self.name
                        )));
                    }
                }
            }
        }
        let n = 64;
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = self.raw_coeffs(i as f64 / n as f64, j as f64 / n as f64)?;
                min = min.min(a.norm() + b.norm());
            }
        }
        if !(min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "one-form `{}` vanishes on the sample grid",
                self.name
            )));
        }
        Ok(())
    }

    fn raw_breaks(&self, horizontal: bool, lo: f64, hi: f64) -> Vec<f64> {
        let curves = self.sigma_components.iter().filter_map(|c| c.curve());
        breaks_for(curves, horizontal, lo, hi)
    }
}

fn breaks_for(
    curves: impl Iterator<Item = CharCurve>,
    horizontal: bool,
    lo: f64,
    hi: f64,
) -> Vec<f64> {
    let mut out = Vec::new();
    for c in curves {
        let matches = matches!(
            (c, horizontal),
            (CharCurve::Horizontal(_), true) | (CharCurve::Vertical(_), false)
        );
        if !matches {
            continue;
        }
        let o = c.ordinate();
        let mut m = (lo - o).floor();
        while o + m <= hi {
            let t = o + m;
            if t > lo && t < hi {
                out.push(t);
            }
            m += 1.0;
        }
    }
    out
}

/// Periods `C1 = int_0^1 a(t, 0) dt` and `C2 = int_0^1 b(0, t) dt`.
pub fn periods(spec: &FieldSpec) -> Result<(Complex64, Complex64)> {
    let c1 = quad::integrate(
        |t| spec.a.eval(t, 0.0),
        0.0,
        1.0,
        &spec.raw_breaks(false, 0.0, 1.0),
    )?;
    let c2 = quad::integrate(
        |t| spec.b.eval(0.0, t),
        0.0,
        1.0,
        &spec.raw_breaks(true, 0.0, 1.0),
    )?;
    Ok((c1, c2))
}

/// Order of the axis-parallel integration path from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathOrder {
    /// `(0,0) -> (x,0) -> (x,y)`.
    XThenY,
    /// `(0,0) -> (0,y) -> (x,y)`.
    YThenX,
}

/// A form rescaled (and possibly reflected in `y`) so that its first
/// integral has periods `1` and `tau` with `Im(tau) > 0`.
#[derive(Debug, Clone)]
pub struct NormalizedField {
    pub base: FieldSpec,
    pub c1: Complex64,
    pub c2: Complex64,
    pub flip_y: bool,
    pub lattice: Lattice,
    /// `1 / C1`.
    pub scale: Complex64,
    curves: Vec<(CharCurve, f64)>,
    z_origin: Option<Complex64>,
}

pub fn normalize(spec: &FieldSpec) -> Result<NormalizedField> {
    spec.validate()?;
    let (c1, c2) = periods(spec)?;
    let cross = (c1 * c2.conj()).im;
    if !(cross.abs() > HYPOCOMPLEX_TOL) {
        return Err(Error::DegenerateForm { value: cross.abs() });
    }
    let ratio = c2 / c1;
    let (flip_y, tau) = if ratio.im > 0.0 {
        (false, ratio)
    } else {
        (true, -ratio)
    };
    let curves = spec
        .sigma_components
        .iter()
        .filter_map(|c| {
            c.curve()
                .map(|cv| (if flip_y { cv.flipped() } else { cv }, c.sigma))
        })
        .collect();
    let z_origin = match &spec.z_exact {
        Some(z) => Some(z.eval(0.0, 0.0)?),
        None => None,
    };
    Ok(NormalizedField {
        base: spec.clone(),
        c1,
        c2,
        flip_y,
        lattice: Lattice::new(tau)?,
        scale: 1.0 / c1,
        curves,
        z_origin,
    })
}

impl NormalizedField {
    pub fn tau(&self) -> Complex64 {
        self.lattice.tau()
    }

    fn raw_y(&self, y: f64) -> f64 {
        if self.flip_y {
            -y
        } else {
            y
        }
    }

    /// Normalised coefficients `(a, b)` at `p`.
    pub fn coeffs(&self, x: f64, y: f64) -> Result<(Complex64, Complex64)> {
        let (a, b) = self.base.raw_coeffs(x, self.raw_y(y))?;
        let b = if self.flip_y { -b } else { b };
        Ok((a * self.scale, b * self.scale))
    }

    /// Normalised `a` alone.
    pub fn coeff_a(&self, x: f64, y: f64) -> Result<Complex64> {
        Ok(self.base.a.eval(x, self.raw_y(y))? * self.scale)
    }

    /// Normalised `b` alone.
    pub fn coeff_b(&self, x: f64, y: f64) -> Result<Complex64> {
        let b = self.base.b.eval(x, self.raw_y(y))? * self.scale;
        Ok(if self.flip_y { -b } else { b })
    }

    /// Factor relating the operators: `L_normalised = factor * L_raw` after
    /// the reflection.
    pub fn operator_factor(&self) -> Complex64 {
        if self.flip_y {
            -self.scale
        } else {
            self.scale
        }
    }

    /// Moves a grid sampled in the original coordinates to normalised ones.
    pub fn to_working(&self, g: &GridFunction) -> GridFunction {
        if self.flip_y {
            g.reflect_y()
        } else {
            g.clone()
        }
    }

    /// Inverse of [`Self::to_working`].
    pub fn from_working(&self, g: &GridFunction) -> GridFunction {
        self.to_working(g)
    }

    /// A right-hand side of `L_raw u = ...` expressed for the normalised operator.
    pub fn rhs_to_working(&self, g: &GridFunction) -> GridFunction {
        self.to_working(g).scale(self.operator_factor())
    }

    /// Characteristic curves (in normalised coordinates) with their orders.
    pub fn curves(&self) -> &[(CharCurve, f64)] {
        &self.curves
    }

    pub fn sigma_max(&self) -> f64 {
        self.base.sigma_max()
    }

    /// Periodic distance to the nearest declared characteristic curve.
    pub fn sigma_distance(&self, p: TorusPoint) -> Option<f64> {
        self.curves
            .iter()
            .map(|(c, _)| c.distance(p))
            .min_by(f64::total_cmp)
    }

    /// Order of the nearest declared curve within `radius` of `p`, if any.
    pub fn nearby_sigma(&self, p: TorusPoint, radius: f64) -> Option<f64> {
        self.curves
            .iter()
            .filter(|(c, _)| c.distance(p) <= radius)
            .map(|(_, s)| *s)
            .max_by(f64::total_cmp)
    }

    pub fn has_exact(&self) -> bool {
        self.base.z_exact.is_some()
    }

    /// `Z(p)` from the closed-form expression, when one was supplied.
    pub fn exact_first_integral(&self, p: TorusPoint) -> Option<Result<Complex64>> {
        let z = self.base.z_exact.as_ref()?;
        let origin = self.z_origin?;
        Some(
            z.eval(p.x, self.raw_y(p.y))
                .map(|v| (v - origin) * self.scale),
        )
    }

    /// `Z(p)` by composite Gauss-Legendre quadrature along an axis path.
    pub fn first_integral_quadrature(&self, p: TorusPoint, order: PathOrder) -> Result<Complex64> {
        let curves = || self.curves.iter().map(|(c, _)| *c);
        let xb = breaks_for(curves(), false, p.x.min(0.0), p.x.max(0.0));
        let yb = breaks_for(curves(), true, p.y.min(0.0), p.y.max(0.0));
        match order {
            PathOrder::XThenY => {
                let first = quad::integrate(|t| Ok(self.coeffs(t, 0.0)?.0), 0.0, p.x, &xb)?;
                let second = quad::integrate(|t| Ok(self.coeffs(p.x, t)?.1), 0.0, p.y, &yb)?;
                Ok(first + second)
            }
            PathOrder::YThenX => {
                let first = quad::integrate(|t| Ok(self.coeffs(0.0, t)?.1), 0.0, p.y, &yb)?;
                let second = quad::integrate(|t| Ok(self.coeffs(t, p.y)?.0), 0.0, p.x, &xb)?;
                Ok(first + second)
            }
        }
    }

    /// `Z(p) = int_{(0,0)}^{p} omega`, exact when available.
    pub fn first_integral(&self, p: TorusPoint) -> Result<Complex64> {
        match self.exact_first_integral(p) {
            Some(v) => v,
            None => self.first_integral_quadrature(p, PathOrder::XThenY),
        }
    }
}

pub fn coeff_eval(nf: &NormalizedField, p: TorusPoint) -> Result<(Complex64, Complex64)> {
    nf.coeffs(p.x, p.y)
}

pub fn first_integral(nf: &NormalizedField, p: TorusPoint) -> Result<Complex64> {
    nf.first_integral(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coefficient_examples() {
        let nf = normalize(&FieldSpec::builtin("elliptic").unwrap()).unwrap();
        let (a, b) = coeff_eval(&nf, TorusPoint::new(0.3, 0.7)).unwrap();
        assert!((a - 1.0).norm() < 1e-12 && (b - c(0.0, 1.0)).norm() < 1e-12);

        let nf = normalize(&FieldSpec::builtin("degenerate_sin2").unwrap()).unwrap();
        for x in [0.0, 0.4, 0.9] {
            let (a, b) = coeff_eval(&nf, TorusPoint::new(x, 0.5)).unwrap();
            assert!((a - 1.0).norm() < 1e-12 && (b - c(0.0, 1.0)).norm() < 1e-12);
            let (a, b) = coeff_eval(&nf, TorusPoint::new(x, 0.0)).unwrap();
            assert!((a - 1.0).norm() < 1e-12 && b.norm() < 1e-12);
        }
    }

    #[test]
    fn period_examples() {
        let (c1, c2) = periods(&FieldSpec::builtin("elliptic").unwrap()).unwrap();
        assert!((c1 - 1.0).norm() < 1e-10 && (c2 - c(0.0, 1.0)).norm() < 1e-10);
        let (c1, c2) = periods(&FieldSpec::builtin("degenerate_sin2").unwrap()).unwrap();
        assert!((c1 - 1.0).norm() < 1e-10 && (c2 - c(0.0, 0.5)).norm() < 1e-10);
        let (c1, c2) = periods(&FieldSpec::builtin("analytic_perturbed").unwrap()).unwrap();
        assert!((c1 - 1.0).norm() < 1e-10 && (c2 - c(0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn normalization_examples() {
        let nf = normalize(&FieldSpec::builtin("elliptic").unwrap()).unwrap();
        assert!(!nf.flip_y);
        assert!((nf.tau() - c(0.0, 1.0)).norm() < 1e-10);

        let flipped = FieldSpec::new("flip", parse_expr("1").unwrap(), parse_expr("-i").unwrap());
        let nf = normalize(&flipped).unwrap();
        assert!(nf.flip_y);
        assert!((nf.tau() - c(0.0, 1.0)).norm() < 1e-10);
        let z = nf.first_integral(TorusPoint::new(0.2, 0.3)).unwrap();
        assert!((z - c(0.2, 0.3)).norm() < 1e-10);

        let real = FieldSpec::new("real", parse_expr("1").unwrap(), parse_expr("1").unwrap());
        assert!(matches!(
            normalize(&real),
            Err(Error::DegenerateForm { .. })
        ));
    }

    #[test]
    fn scaled_form_is_normalized() {
        // omega = (2+i) (dx + 0.5 i dy) has C1 = 2+i
        let spec = FieldSpec::new(
            "scaled",
            parse_expr("2+i").unwrap(),
            parse_expr("(2+i)*0.5*i").unwrap(),
        );
        let nf = normalize(&spec).unwrap();
        assert!((nf.c1 - c(2.0, 1.0)).norm() < 1e-10);
        assert!((nf.tau() - c(0.0, 0.5)).norm() < 1e-10);
        let p = TorusPoint::new(0.3, 0.4);
        let z = nf.first_integral(p).unwrap();
        let z1 = nf.first_integral(p.shifted(1, 0)).unwrap();
        let z2 = nf.first_integral(p.shifted(0, 1)).unwrap();
        assert!((z1 - z - 1.0).norm() < 1e-9);
        assert!((z2 - z - nf.tau()).norm() < 1e-9);
    }

    #[test]
    fn first_integral_examples() {
        let nf = normalize(&FieldSpec::builtin("elliptic").unwrap()).unwrap();
        let z = first_integral(&nf, TorusPoint::new(0.25, 0.5)).unwrap();
        assert!((z - c(0.25, 0.5)).norm() < 1e-9);

        let nf = normalize(&FieldSpec::builtin("degenerate_sin2").unwrap()).unwrap();
        let p = TorusPoint::new(0.0, 1.0);
        let z = nf.first_integral_quadrature(p, PathOrder::XThenY).unwrap();
        assert!((z - c(0.0, 0.5)).norm() < 1e-9);

        let nf = normalize(&FieldSpec::builtin("analytic_perturbed").unwrap()).unwrap();
        let p = TorusPoint::new(0.2, 0.3);
        let exact = nf.first_integral(p).unwrap();
        let quad = nf.first_integral_quadrature(p, PathOrder::YThenX).unwrap();
        assert!((exact - quad).norm() < 1e-9);
    }

    #[test]
    fn curves_and_hints() {
        assert_eq!(CharCurve::parse("y=0"), Some(CharCurve::Horizontal(0.0)));
        assert_eq!(
            CharCurve::parse(" x = 1.25 "),
            Some(CharCurve::Vertical(0.25))
        );
        assert_eq!(CharCurve::parse("circle"), None);
        let h = CharCurve::Horizontal(0.0);
        assert!((h.distance(TorusPoint::new(0.3, 0.97)) - 0.03).abs() < 1e-12);
        assert_eq!(breaks_for([h].into_iter(), true, -0.5, 2.0), vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_non_periodic_coefficients() {
        let spec = FieldSpec::new(
            "bad",
            parse_expr("1 + x").unwrap(),
            parse_expr("i").unwrap(),
        );
        assert!(matches!(normalize(&spec), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reflected_field_transfers_rhs() {
        let spec = FieldSpec::new(
            "flipped",
            parse_expr("1").unwrap(),
            parse_expr("-i").unwrap(),
        );
        let nf = normalize(&spec).unwrap();
        assert!(nf.flip_y);
        let n = 64;
        let tp = 2.0 * std::f64::consts::PI;
        let w = GridFunction::from_fn(n, |x, y| c((tp * x).sin() * (tp * y).cos(), 0.0)).unwrap();
        // L_raw = -i d/dx - d/dy
        let f = GridFunction::from_fn(n, |x, y| {
            let wx = tp * (tp * x).cos() * (tp * y).cos();
            let wy = -tp * (tp * x).sin() * (tp * y).sin();
            c(0.0, -1.0) * wx - wy
        })
        .unwrap();
        let lw = crate::verify::apply_l_fd(&nf, &nf.to_working(&w)).unwrap();
        let err = lw.sub(&nf.rhs_to_working(&f)).unwrap().sup_norm();
        assert!(err < 5e-2, "{err}");
        assert_eq!(nf.from_working(&nf.to_working(&w)), w);
    }
}
