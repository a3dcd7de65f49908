use hypotorus::{theta_check, Complex64, Lattice, ThetaContext};
use proptest::prelude::*;
use std::f64::consts::PI;

fn ctx(re: f64, im: f64) -> ThetaContext {
    ThetaContext::new(Lattice::new(Complex64::new(re, im)).unwrap(), 1e-14).unwrap()
}

#[test]
fn laws_hold_on_reference_moduli() {
    for (re, im) in [(0.0, 1.0), (0.0, 0.5), (0.3, 0.8)] {
        let c = theta_check(&ctx(re, im), 100, 7).unwrap();
        assert!(c.period <= 1e-10, "tau=({re},{im}) period {:e}", c.period);
        assert!(
            c.quasi_period <= 1e-9,
            "tau=({re},{im}) quasi {:e}",
            c.quasi_period
        );
        assert!(c.zero <= 1e-10, "tau=({re},{im}) zero {:e}", c.zero);
    }
}

#[test]
fn value_at_origin_matches_product_formula() {
    // theta3(0 | i) = pi^(1/4) / Gamma(3/4)
    let gamma_3_4 = 1.225_416_702_465_177_6;
    let expect = PI.powf(0.25) / gamma_3_4;
    let got = ctx(0.0, 1.0).eval(Complex64::new(0.0, 0.0)).unwrap();
    assert!((got - expect).norm() < 1e-13, "{got}");
}

#[test]
fn log_derivative_has_unit_residue() {
    let c = ctx(0.3, 0.8);
    let z0 = c.z0();
    let eps = 1e-4;
    // (1/2 pi i) contour integral of G around z0
    let m = 64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let t = 2.0 * PI * k as f64 / m as f64;
        let dz =
            Complex64::new(0.0, 1.0) * eps * Complex64::from_polar(1.0, t) * (2.0 * PI / m as f64);
        sum += c
            .log_deriv(z0 + eps * Complex64::from_polar(1.0, t))
            .unwrap()
            * dz;
    }
    let residue = sum / Complex64::new(0.0, 2.0 * PI);
    assert!((residue - 1.0).norm() < 1e-8, "{residue}");
}

proptest! {
    #[test]
    fn log_derivative_shifts_by_lattice(s in 0.0f64..1.0, t in 0.0f64..1.0, j in -2i64..=2, k in -2i64..=2) {
        let c = ctx(0.3, 0.8);
        let tau = c.tau();
        let z = c.z0() + 0.2 + s * 0.5 + tau * (0.2 + t * 0.5);
        let shifted = z + j as f64 + tau * k as f64;
        let lhs = c.log_deriv(shifted).unwrap();
        let rhs = c.log_deriv(z).unwrap() - Complex64::new(0.0, 2.0 * PI * k as f64);
        prop_assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
    }
}
