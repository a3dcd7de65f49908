//! Complex-valued expressions in the real variables `x` and `y`.
//!
//! Grammar (whitespace insignificant, `^` binds tightest):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' intlit)?
//! base   := number | 'i' | 'pi' | 'x' | 'y' | ident '(' expr ')' | '(' expr ')' | '-' base
//! ident  := sin | cos | exp | abs | sqrt | conj
//! ```

mod diff;
mod parser;

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use diff::symbolic_diff;
pub use parser::parse_expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Conj,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Conj => "conj",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "conj" => Func::Conj,
            _ => return None,
        })
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Abs => Complex64::new(z.norm(), 0.0),
            Func::Sqrt => z.sqrt(),
            Func::Conj => z.conj(),
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(c: impl Into<Complex64>) -> Self {
        Expr::Const(c.into())
    }

    pub fn real(v: f64) -> Self {
        Expr::Const(Complex64::new(v, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == Complex64::new(0.0, 0.0))
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// Evaluates the expression at the real point `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<Complex64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X) => Complex64::new(x, 0.0),
            Expr::Var(Var::Y) => Complex64::new(y, 0.0),
            Expr::Neg(a) => -a.eval(x, y)?,
            Expr::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            Expr::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            Expr::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            Expr::Div(a, b) => {
                let den = b.eval(x, y)?;
                if den == Complex64::new(0.0, 0.0) {
                    return Err(Error::DivisionByZero {
                        node: self.to_string(),
                    });
                }
                a.eval(x, y)? / den
            }
            Expr::Pow(a, e) => {
                let base = a.eval(x, y)?;
                if *e < 0 && base == Complex64::new(0.0, 0.0) {
                    return Err(Error::DivisionByZero {
                        node: self.to_string(),
                    });
                }
                base.powi(*e)
            }
            Expr::Call(f, a) => f.apply(a.eval(x, y)?),
        })
    }
}

/// Evaluates `ast` at `(x, y)`.
pub fn eval_expr(ast: &Expr, x: f64, y: f64) -> Result<Complex64> {
    ast.eval(x, y)
}

// Debug formatting of f64 is the shortest round-tripping representation.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl fmt::Display for Expr {
    /// Fully parenthesised form that re-parses to an equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                let re = fmt_f64(c.re.abs());
                let im = fmt_f64(c.im.abs());
                match (c.re == 0.0 && c.im != 0.0, c.im == 0.0) {
                    (_, true) if c.re.is_sign_negative() => write!(f, "(-{re})"),
                    (_, true) => write!(f, "{re}"),
                    (true, false) => {
                        let sign = if c.im.is_sign_negative() { "-" } else { "" };
                        write!(f, "({sign}{im}*i)")
                    }
                    (false, false) => {
                        let rs = if c.re.is_sign_negative() { "-" } else { "" };
                        let is = if c.im.is_sign_negative() { "-" } else { "+" };
                        write!(f, "({rs}{re}{is}{im}*i)")
                    }
                }
            }
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, e) => write!(f, "({a}^{e})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
