//! Torus points and the period lattice `Z + tau Z`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point of the universal cover of the torus in angular coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Representative in `[0,1)^2` together with the integer shift removed.
    pub fn reduce(self) -> (TorusPoint, i64, i64) {
        let jx = self.x.floor();
        let jy = self.y.floor();
        let mut rx = self.x - jx;
        let mut ry = self.y - jy;
        // floor can leave exactly 1.0 after subtraction for tiny negative inputs
        let (mut ix, mut iy) = (jx as i64, jy as i64);
        if rx >= 1.0 {
            rx -= 1.0;
            ix += 1;
        }
        if ry >= 1.0 {
            ry -= 1.0;
            iy += 1;
        }
        (TorusPoint::new(rx, ry), ix, iy)
    }

    pub fn shifted(self, j: i64, k: i64) -> Self {
        Self::new(self.x + j as f64, self.y + k as f64)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// The lattice generated by `1` and `tau` with `Im(tau) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    tau: Complex64,
}

/// A complex number written as `w + j + k tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced {
    pub w: Complex64,
    pub j: i64,
    pub k: i64,
}

impl Lattice {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.re.is_finite() && tau.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau = {tau} is not finite")));
        }
        if tau.im <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tau = {tau} must have strictly positive imaginary part"
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// Lattice coordinates `(s, t)` with `z = s + t tau`.
    pub fn coordinates(&self, z: Complex64) -> (f64, f64) {
        let t = z.im / self.tau.im;
        (z.re - t * self.tau.re, t)
    }

    pub fn point(&self, j: i64, k: i64) -> Complex64 {
        Complex64::new(j as f64, 0.0) + self.tau * k as f64
    }

    /// Reduction into the half-open parallelogram `{s + t tau : s, t in [0,1)}`.
    pub fn reduce(&self, z: Complex64) -> Result<Reduced> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("{z} is not finite")));
        }
        Ok(self.reduce_with_offset(z, 0.0))
    }

    /// Reduction into the parallelogram centred at the origin,
    /// `{s + t tau : s, t in [-1/2, 1/2)}`.
    pub fn reduce_centered(&self, z: Complex64) -> Reduced {
        self.reduce_with_offset(z, 0.5)
    }

    fn reduce_with_offset(&self, z: Complex64, offset: f64) -> Reduced {
        let (s, t) = self.coordinates(z);
        let k = (t + offset).floor();
        let j = (s + offset).floor();
        let w = z - Complex64::new(j, 0.0) - self.tau * k;
        let mut red = Reduced {
            w,
            j: j as i64,
            k: k as i64,
        };
        // rounding can push a coordinate to exactly the upper edge
        let (s2, t2) = self.coordinates(red.w);
        if t2 + offset >= 1.0 {
            red.w -= self.tau;
            red.k += 1;
        }
        if s2 + offset >= 1.0 {
            red.w -= 1.0;
            red.j += 1;
        }
        red
    }
}

/// Reduce `z` modulo the lattice into the fundamental parallelogram.
///
/// Returns `(w, j, k)` with `z = w + j + k tau` and `w = s + t tau`, `s, t in [0, 1)`.
pub fn lattice_reduce(z: Complex64, lattice: &Lattice) -> Result<(Complex64, i64, i64)> {
    let r = lattice.reduce(z)?;
    Ok((r.w, r.j, r.k))
}
