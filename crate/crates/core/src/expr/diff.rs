use num_complex::Complex64;

use super::{Expr, Func, Var};
use crate::error::{Error, Result};

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn as_const(e: &Expr) -> Option<Complex64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expr::Add(bx(a), bx(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expr::Sub(bx(a), bx(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(bx(other)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    let one = Complex64::new(1.0, 0.0);
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        _ if a.is_zero() || b.is_zero() => Expr::real(0.0),
        (Some(x), _) if x == one => b,
        (_, Some(y)) if y == one => a,
        _ => Expr::Mul(bx(a), bx(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Expr::real(0.0);
    }
    if as_const(&b) == Some(Complex64::new(1.0, 0.0)) {
        return a;
    }
    Expr::Div(bx(a), bx(b))
}

fn pow(a: Expr, e: i32) -> Expr {
    match e {
        0 => Expr::real(1.0),
        1 => a,
        _ => Expr::Pow(bx(a), e),
    }
}

/// Derivative of `ast` with respect to the real variable `var`.
///
/// `sin`, `cos`, `exp` and `sqrt` are differentiated as holomorphic functions
/// of their argument; `abs` and `conj` are rejected when their argument
/// depends on `var`.
pub fn symbolic_diff(ast: &Expr, var: Var) -> Result<Expr> {
    if !ast.depends_on(var) {
        return Ok(Expr::real(0.0));
    }
    Ok(match ast {
        Expr::Const(_) => Expr::real(0.0),
        Expr::Var(v) => Expr::real(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(symbolic_diff(a, var)?),
        Expr::Add(a, b) => add(symbolic_diff(a, var)?, symbolic_diff(b, var)?),
        Expr::Sub(a, b) => sub(symbolic_diff(a, var)?, symbolic_diff(b, var)?),
        Expr::Mul(a, b) => add(
            mul(symbolic_diff(a, var)?, (**b).clone()),
            mul((**a).clone(), symbolic_diff(b, var)?),
        ),
        Expr::Div(a, b) => {
            // (a'b - ab') / b^2
            let num = sub(
                mul(symbolic_diff(a, var)?, (**b).clone()),
                mul((**a).clone(), symbolic_diff(b, var)?),
            );
            div(num, pow((**b).clone(), 2))
        }
        Expr::Pow(a, e) => mul(
            mul(Expr::real(*e as f64), pow((**a).clone(), e - 1)),
            symbolic_diff(a, var)?,
        ),
        Expr::Call(f, a) => {
            let inner = symbolic_diff(a, var)?;
            let outer = match f {
                Func::Sin => Expr::Call(Func::Cos, a.clone()),
                Func::Cos => neg(Expr::Call(Func::Sin, a.clone())),
                Func::Exp => Expr::Call(Func::Exp, a.clone()),
                Func::Sqrt => div(Expr::real(0.5), Expr::Call(Func::Sqrt, a.clone())),
                Func::Abs | Func::Conj => {
                    return Err(Error::UnsupportedDerivative {
                        function: f.name().to_string(),
                    })
                }
            };
            mul(outer, inner)
        }
    })
}
