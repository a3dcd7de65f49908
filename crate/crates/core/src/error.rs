use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("exponent at offset {offset} must be an integer literal")]
    NonIntegerExponent { offset: usize },

    #[error("division by zero in `{node}`")]
    DivisionByZero { node: String },

    #[error("cannot differentiate `{function}` symbolically")]
    UnsupportedDerivative { function: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(
        "periods are real-proportional, form is not hypocomplex: |Im(C1*conj(C2))| = {value:e}"
    )]
    DegenerateForm { value: f64 },

    #[error("argument {z} is within {distance:e} of a zero of theta")]
    PoleProximity { z: String, distance: f64 },

    #[error("singular configuration: source coincides with target modulo the integer lattice")]
    SingularConfiguration,

    #[error("degenerate similarity check: normalization constant {0:e} is numerically zero")]
    DegenerateCheck(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
