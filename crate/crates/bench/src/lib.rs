//! Benchmark fixtures shared by the criterion benches.

use hypotorus::{normalize, Complex64, FieldSpec, GridFunction, KernelContext};

/// Operator for a builtin field at grid size `n`.
pub fn kernel(name: &str, n: usize) -> KernelContext {
    let nf =
        normalize(&FieldSpec::builtin(name).expect("builtin field")).expect("builtin normalises");
    KernelContext::new(&nf, n, 6, 1e-14).expect("kernel context")
}

/// A smooth mean-zero density.
pub fn density(n: usize) -> GridFunction {
    let tp = 2.0 * std::f64::consts::PI;
    GridFunction::from_fn(n, |x, y| Complex64::new((tp * x).sin(), (tp * y).cos())).expect("grid")
}
