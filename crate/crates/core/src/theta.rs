//! The third Jacobi theta function on the lattice `Z + tau Z`.
//!
//! `Theta(z) = sum_m exp(i pi m^2 tau) exp(2 pi i m z)` satisfies
//!
//! * `Theta(z + 1) = Theta(z)`,
//! * `Theta(z + tau) = exp(-i pi tau - 2 pi i z) Theta(z)`,
//! * its only zero in the fundamental parallelogram is the simple zero
//!   `z0 = (1 + tau) / 2`.
//!
//! Arguments are reduced into the fundamental parallelogram before the
//! series is summed and the exact quasi-periodicity factor is multiplied
//! back, so the truncated series never sees `|Im z| > Im tau`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Distance below which the logarithmic derivative is refused.
pub const POLE_GUARD: f64 = 1e-13;

/// Smallest `M` whose series tail is below `tol` for `|Im z| <= 2 Im tau`.
///
/// The tail is summed directly: `sum_{|m|>M} exp(-pi Im(tau) m^2 + 2 pi |m| ymax)`.
pub fn truncation_terms(tau: Complex64, tol: f64) -> Result<usize> {
    if !(tau.im > 0.0) || !tau.im.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} must have strictly positive imaginary part"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol = {tol} must be positive"
        )));
    }
    let ymax = 2.0 * tau.im;
    let term = |m: f64| (-PI * tau.im * m * m + 2.0 * PI * m * ymax).exp();
    let mut m = 0usize;
    loop {
        // tail beyond m; terms decay super-exponentially once past the peak
        let mut tail = 0.0;
        let mut l = m + 1;
        loop {
            let t = 2.0 * term(l as f64);
            tail += t;
            let past_peak = (l as f64) > 2.0 * ymax / tau.im;
            if past_peak && t < tail * 1e-17 {
                break;
            }
            l += 1;
            if l > m + 100_000 {
                break;
            }
        }
        if tail <= tol {
            return Ok(m);
        }
        m += 1;
    }
}

/// Closed-form upper bound for [`truncation_terms`].
pub fn truncation_terms_bound(tau: Complex64, tol: f64) -> usize {
    let ymax = 2.0 * tau.im;
    let a = ((1.0 / tol).ln() / (PI * tau.im)).sqrt().ceil();
    let b = (ymax / tau.im).ceil();
    (a + 2.0 * b + 2.0) as usize
}

/// Evaluation context for `Theta`, `Theta'` and `Theta'/Theta`.
#[derive(Debug, Clone)]
pub struct ThetaContext {
    lattice: Lattice,
    m_max: usize,
    tol: f64,
    z0: Complex64,
    /// `q^(2m+1)` for `m = 0..m_max`, with `q = exp(i pi tau)`.
    q_odd: Vec<Complex64>,
}

impl ThetaContext {
    pub fn new(lattice: Lattice, tol: f64) -> Result<Self> {
        let m = truncation_terms(lattice.tau(), tol)?;
        Self::with_terms(lattice, m, tol)
    }

    pub fn with_terms(lattice: Lattice, m_max: usize, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "theta tolerance {tol} must lie in (0, 1e-6]"
            )));
        }
        let needed = truncation_terms(lattice.tau(), tol)?;
        if m_max < needed {
            return Err(Error::InvalidArgument(format!(
                "m_max = {m_max} is below the {needed} terms required for tol = {tol:e}"
            )));
        }
        let tau = lattice.tau();
        let q = (Complex64::i() * PI * tau).exp();
        let q_odd = (0..m_max).map(|m| q.powi(2 * m as i32 + 1)).collect();
        Ok(Self {
            lattice,
            m_max,
            tol,
            z0: (1.0 + tau) / 2.0,
            q_odd,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn tau(&self) -> Complex64 {
        self.lattice.tau()
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The zero `(1 + tau)/2` in the fundamental parallelogram.
    pub fn z0(&self) -> Complex64 {
        self.z0
    }

    /// `(Theta(w), Theta'(w))` by direct summation; `w` must satisfy
    /// `0 <= Im w < Im tau` (up to rounding).
    #[inline]
    pub(crate) fn series(&self, w: Complex64) -> (Complex64, Complex64) {
        let phase = 2.0 * PI * w.re;
        let mag = (-2.0 * PI * w.im).exp();
        let e = Complex64::new(mag * phase.cos(), mag * phase.sin());
        let e_inv = Complex64::new(phase.cos() / mag, -phase.sin() / mag);

        let mut theta = Complex64::new(1.0, 0.0);
        let mut dsum = Complex64::new(0.0, 0.0);
        let mut fwd = Complex64::new(1.0, 0.0);
        let mut bwd = Complex64::new(1.0, 0.0);
        for (m, &qo) in self.q_odd.iter().enumerate() {
            fwd = fwd * e * qo;
            bwd = bwd * e_inv * qo;
            theta += fwd + bwd;
            dsum += (fwd - bwd) * (m as f64 + 1.0);
        }
        (theta, dsum * TWO_PI_I)
    }

    fn check(z: Complex64) -> Result<()> {
        if z.re.is_finite() && z.im.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{z} is not finite")))
        }
    }

    /// `(Theta(z), Theta'(z))` with argument reduction.
    pub fn eval_pair(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        Self::check(z)?;
        let r = self.lattice.reduce(z)?;
        let (t, dt) = self.series(r.w);
        if r.k == 0 {
            return Ok((t, dt));
        }
        let k = r.k as f64;
        let tau = self.tau();
        let factor = (-Complex64::i() * PI * k * k * tau - TWO_PI_I * k * r.w).exp();
        Ok((factor * t, factor * (dt - TWO_PI_I * k * t)))
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_pair(z)?.0)
    }

    pub fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_pair(z)?.1)
    }

    /// Distance from `z` to the nearest zero `z0 + j + k tau` (locally).
    pub fn zero_distance(&self, z: Complex64) -> f64 {
        self.lattice.reduce_centered(z - self.z0).w.norm()
    }

    /// `Theta'(z) / Theta(z)`.
    pub fn log_deriv(&self, z: Complex64) -> Result<Complex64> {
        Self::check(z)?;
        let r = self.lattice.reduce_centered(z - self.z0);
        let d = r.w.norm();
        if d < POLE_GUARD {
            return Err(Error::PoleProximity {
                z: format!("{z}"),
                distance: d,
            });
        }
        Ok(self.shifted_log_deriv(r.w) - TWO_PI_I * r.k as f64)
    }

    /// `Theta'/Theta` at `z0 + zeta` for `zeta` already in the centred
    /// parallelogram. No pole check.
    #[inline]
    pub(crate) fn shifted_log_deriv(&self, zeta: Complex64) -> Complex64 {
        let (t, dt) = self.series(zeta + self.z0);
        dt / t
    }
}

/// Maximum deviations from the three defining properties of `Theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaCheck {
    pub samples: usize,
    /// `max |Theta(z + 1) - Theta(z)|`.
    pub period: f64,
    /// `max |Theta(z + tau) - e(z) Theta(z)| / |e(z) Theta(z)|`.
    pub quasi_period: f64,
    /// `|Theta(z0)|`.
    pub zero: f64,
}

/// Checks the period, quasi-period and zero of `Theta` at `samples`
/// pseudo-random points `z = s + t tau`, `s, t in [0, 1)`.
pub fn theta_check(ctx: &ThetaContext, samples: usize, seed: u64) -> Result<ThetaCheck> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tau = ctx.tau();
    let mut period = 0.0f64;
    let mut quasi = 0.0f64;
    for _ in 0..samples {
        let z = rng.gen::<f64>() + tau * rng.gen::<f64>();
        let t = ctx.eval(z)?;
        period = period.max((ctx.eval(z + 1.0)? - t).norm());
        let expect = (-Complex64::i() * PI * tau - TWO_PI_I * z).exp() * t;
        let dev = (ctx.eval(z + tau)? - expect).norm() / expect.norm().max(f64::MIN_POSITIVE);
        quasi = quasi.max(dev);
    }
    Ok(ThetaCheck {
        samples,
        period,
        quasi_period: quasi,
        zero: ctx.eval(ctx.z0())?.norm(),
    })
}

pub fn theta_eval(ctx: &ThetaContext, z: Complex64) -> Result<Complex64> {
    ctx.eval(z)
}

pub fn theta_deriv(ctx: &ThetaContext, z: Complex64) -> Result<Complex64> {
    ctx.deriv(z)
}

pub fn theta_log_deriv(ctx: &ThetaContext, z: Complex64) -> Result<Complex64> {
    ctx.log_deriv(z)
}
