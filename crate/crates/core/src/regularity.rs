//! Holder exponent bookkeeping for `L^q` data with characteristic order `sigma`.

use crate::error::{Error, Result};

/// Exponents governing the Holder regularity of `T_omega g` for `g in L^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityParams {
    pub q: f64,
    pub sigma: f64,
    /// Conjugate exponent `q / (q - 1)`.
    pub p: f64,
    /// `sigma / (sigma + 1)`.
    pub mu: f64,
    /// `(2 - p - mu) / p`; may be non-positive when `q <= 2 + sigma`.
    pub alpha: f64,
}

impl RegularityParams {
    pub fn is_holder(&self) -> bool {
        self.alpha > 0.0
    }
}

pub fn regularity_from(q: f64, sigma: f64) -> Result<RegularityParams> {
    if !q.is_finite() || q <= 1.0 {
        return Err(Error::InvalidArgument(format!("q = {q} must exceed 1")));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} must be >= 0"
        )));
    }
    let p = q / (q - 1.0);
    let mu = sigma / (sigma + 1.0);
    // (2 - p - mu) / p rewritten over a common denominator so that the sign
    // is exact at q = 2 + sigma
    let alpha = (q - 2.0 - sigma) / (q * (sigma + 1.0));
    Ok(RegularityParams {
        q,
        sigma,
        p,
        mu,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let r = regularity_from(4.0, 0.0).unwrap();
        assert!((r.p - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.mu, 0.0);
        assert!((r.alpha - 0.5).abs() < 1e-15);

        let r = regularity_from(3.0, 1.0).unwrap();
        assert!(r.alpha.abs() < 1e-15);

        let r = regularity_from(10.0, 2.0).unwrap();
        assert!((r.p - 10.0 / 9.0).abs() < 1e-15);
        assert!((r.mu - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.alpha - 0.2).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_q() {
        assert!(regularity_from(1.0, 0.0).is_err());
        assert!(regularity_from(0.5, 1.0).is_err());
        assert!(regularity_from(3.0, -0.1).is_err());
    }
}
