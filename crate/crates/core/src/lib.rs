//! Numerical construction of the theta-function Cauchy-Pompeiu operator for
//! closed, hypocomplex one-forms `omega = a dx + b dy` on the two-torus, and
//! solvers for `Lu = f`, `Lu = Au` and `Lu = Au + B conj(u)` with
//! `L = b d/dx - a d/dy`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod lattice;
pub mod quad;
pub mod regularity;
pub mod solvers;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};
pub use field::{normalize, FieldSpec, NormalizedField, ZMap};
pub use grid::GridFunction;
pub use kernel::{kernel_m, t_omega, t_omega_point, KernelContext};
pub use lattice::{lattice_reduce, Lattice, TorusPoint};
pub use num_complex::Complex64;
pub use regularity::{regularity_from, RegularityParams};
pub use solvers::{KCandidate, SolveContext, SolveReport, SolverOptions, Verdict};
pub use theta::{
    theta_check, theta_deriv, theta_eval, theta_log_deriv, truncation_terms, ThetaCheck,
    ThetaContext,
};
