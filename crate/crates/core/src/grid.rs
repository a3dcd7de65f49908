//! Cell-centred samples of doubly periodic functions on the unit square.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::TorusPoint;

pub const MIN_GRID: usize = 4;

/// Complex samples on an `n x n` cell-centred grid over `[0,1]^2`.
///
/// Entry `(i, j)` is the value at `((i + 0.5)/n, (j + 0.5)/n)`; storage is
/// row-major with `i` (the x index) outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(n: usize, values: Vec<Complex64>) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::InvalidArgument(format!(
                "grid resolution {n} is below the minimum {MIN_GRID}"
            )));
        }
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                n * n,
                values.len()
            )));
        }
        if let Some(pos) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "sample {pos} is not finite"
            )));
        }
        Ok(Self { n, values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(n, Complex64::new(0.0, 0.0))
    }

    pub fn constant(n: usize, c: Complex64) -> Result<Self> {
        Self::new(n, vec![c; n * n])
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(n: usize, mut f: impl FnMut(f64, f64) -> Complex64) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = cell_center(n, i, j);
                values.push(f(p.x, p.y));
            }
        }
        Self::new(n, values)
    }

    /// Fallible variant of [`GridFunction::from_fn`].
    pub fn try_from_fn(n: usize, mut f: impl FnMut(f64, f64) -> Result<Complex64>) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = cell_center(n, i, j);
                values.push(f(p.x, p.y)?);
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n + j]
    }

    /// Value at signed indices, wrapped periodically.
    pub fn get_wrapped(&self, i: i64, j: i64) -> Complex64 {
        let n = self.n as i64;
        self.get(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize)
    }

    pub fn point(&self, i: usize, j: usize) -> TorusPoint {
        cell_center(self.n, i, j)
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize, TorusPoint)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).map(move |j| (i, j, cell_center(n, i, j))))
    }

    /// Reflection `y -> -y`, which permutes cell centres `j -> n - 1 - j`.
    pub fn reflect_y(&self) -> Self {
        let n = self.n;
        let values = (0..n * n)
            .map(|c| self.values[(c / n) * n + (n - 1 - c % n)])
            .collect();
        Self { n, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete `L^2(R)` norm, `sqrt(h^2 sum |v|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let h2 = self.h() * self.h();
        (h2 * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two grids of the same size.
    pub fn zip_map(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.n != other.n {
            return Err(Error::InvalidArgument(format!(
                "grid sizes differ: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / (self.values.len() as f64)
    }

    /// Periodic bilinear interpolation between cell centres.
    pub fn interpolate(&self, x: f64, y: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, w) in self.interpolation_stencil(x, y) {
            acc += self.values[idx] * w;
        }
        acc
    }

    /// Indices and weights of the bilinear interpolation at `(x, y)`.
    pub fn interpolation_stencil(&self, x: f64, y: f64) -> [(usize, f64); 4] {
        stencil(self.n, x, y)
    }
}

pub(crate) fn stencil(n: usize, x: f64, y: f64) -> [(usize, f64); 4] {
    let nf = n as f64;
    let u = x * nf - 0.5;
    let v = y * nf - 0.5;
    let i0 = u.floor();
    let j0 = v.floor();
    let fu = u - i0;
    let fv = v - j0;
    let ni = n as i64;
    let i0 = (i0 as i64).rem_euclid(ni) as usize;
    let j0 = (j0 as i64).rem_euclid(ni) as usize;
    let i1 = (i0 + 1) % n;
    let j1 = (j0 + 1) % n;
    [
        (i0 * n + j0, (1.0 - fu) * (1.0 - fv)),
        (i1 * n + j0, fu * (1.0 - fv)),
        (i0 * n + j1, (1.0 - fu) * fv),
        (i1 * n + j1, fu * fv),
    ]
}

pub fn cell_center(n: usize, i: usize, j: usize) -> TorusPoint {
    let nf = n as f64;
    TorusPoint::new((i as f64 + 0.5) / nf, (j as f64 + 0.5) / nf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_nonfinite() {
        assert!(GridFunction::zeros(3).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        v[5] = Complex64::new(f64::NAN, 0.0);
        assert!(GridFunction::new(4, v).is_err());
        assert!(GridFunction::new(4, vec![Complex64::new(0.0, 0.0); 15]).is_err());
    }

    #[test]
    fn cell_centred_layout() {
        let g = GridFunction::from_fn(8, Complex64::new).unwrap();
        assert_eq!(g.get(0, 0), Complex64::new(0.0625, 0.0625));
        assert_eq!(g.get(7, 1), Complex64::new(0.9375, 0.1875));
        assert_eq!(g.get_wrapped(-1, 8), g.get(7, 0));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_wraps() {
        let g = GridFunction::from_fn(16, |x, y| {
            Complex64::new((2.0 * std::f64::consts::PI * x).cos(), y * 0.0)
        })
        .unwrap();
        let p = g.point(3, 5);
        assert!((g.interpolate(p.x, p.y) - g.get(3, 5)).norm() < 1e-14);
        // between the last and the first column
        let v = g.interpolate(0.0, 0.5);
        let expect = 0.5 * (g.get(15, 7) + g.get(0, 7));
        assert!((v - expect).norm() < 1e-14);
    }
}
