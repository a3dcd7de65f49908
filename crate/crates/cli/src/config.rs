//! Case configuration files.
//!
//! Parsing is done by hand over [`serde_json::Value`] so that every schema
//! violation can be reported with the JSON pointer of the offending value.

use std::path::Path;

use hypotorus::expr::{parse_expr, Expr};
use hypotorus::field::SigmaComponent;
use hypotorus::kernel::{MAX_REFINE_DEPTH, MIN_REFINE_DEPTH};
use hypotorus::{FieldSpec, SolverOptions};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const MIN_GRID_N: usize = 16;
pub const MAX_GRID_N: usize = 256;
pub const DEFAULT_GRID_N: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    F,
    A,
    Ab,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::F => "f",
            Equation::A => "a",
            Equation::Ab => "ab",
        }
    }
}

/// Right-hand side expressions, already parsed.
#[derive(Debug, Clone, Default)]
pub struct RhsConfig {
    pub f: Option<Expr>,
    pub a: Option<Expr>,
    pub b: Option<Expr>,
    pub manufactured_w: Option<Expr>,
}

#[derive(Debug, Clone)]
pub struct CaseConfig {
    pub field: FieldSpec,
    pub grid_n: usize,
    /// Absent for configs used only by `field-info` and `operator-check`.
    pub equation: Option<Equation>,
    pub rhs: RhsConfig,
    pub solver: SolverOptions,
    pub refine_depth: usize,
    pub theta_tol: f64,
}

pub fn load_config(path: &Path) -> CliResult<CaseConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&value)
}

/// A JSON object together with its pointer, tracking which keys are allowed.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    ptr: String,
}

impl<'a> Obj<'a> {
    fn new(value: &'a Value, ptr: &str) -> CliResult<Self> {
        match value {
            Value::Object(map) => Ok(Self {
                map,
                ptr: ptr.to_string(),
            }),
            _ => Err(CliError::schema(display_ptr(ptr), "expected an object")),
        }
    }

    fn child(&self, key: &str) -> String {
        format!("{}/{}", self.ptr, key.replace('~', "~0").replace('/', "~1"))
    }

    fn allow(&self, keys: &[&str]) -> CliResult<()> {
        match self.map.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(CliError::schema(self.child(k), "unknown key")),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn string(&self, key: &str) -> CliResult<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(CliError::schema(self.child(key), "expected a string")),
        }
    }

    fn expr(&self, key: &str) -> CliResult<Option<Expr>> {
        self.string(key)?
            .map(|s| parse_expr(s).map_err(|e| CliError::schema(self.child(key), e.to_string())))
            .transpose()
    }

    fn number(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| CliError::schema(self.child(key), "expected a number")),
        }
    }

    fn uint(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().map(|u| u as usize).ok_or_else(|| {
                CliError::schema(self.child(key), "expected a non-negative integer")
            }),
        }
    }
}

fn display_ptr(ptr: &str) -> String {
    if ptr.is_empty() {
        "/".to_string()
    } else {
        ptr.to_string()
    }
}

pub fn parse_config(value: &Value) -> CliResult<CaseConfig> {
    let root = Obj::new(value, "")?;
    root.allow(&[
        "field", "grid_n", "equation", "rhs", "solver", "kernel", "theta",
    ])?;

    let field = match root.get("field") {
        Some(v) => parse_field(v, &root.child("field"))?,
        None => return Err(CliError::schema("/field", "missing required key")),
    };

    let grid_n = root.uint("grid_n", DEFAULT_GRID_N)?;
    if !(MIN_GRID_N..=MAX_GRID_N).contains(&grid_n) {
        return Err(CliError::schema(
            "/grid_n",
            format!("{grid_n} outside [{MIN_GRID_N}, {MAX_GRID_N}]"),
        ));
    }

    let equation = match root.string("equation")? {
        None => None,
        Some("f") => Some(Equation::F),
        Some("a") => Some(Equation::A),
        Some("ab") => Some(Equation::Ab),
        Some(other) => {
            return Err(CliError::schema(
                "/equation",
                format!("`{other}` is not one of \"f\", \"a\", \"ab\""),
            ))
        }
    };

    let rhs = match root.get("rhs") {
        Some(v) => parse_rhs(v, &root.child("rhs"))?,
        None => RhsConfig::default(),
    };
    check_rhs_keys(equation, &rhs, root.get("rhs").is_some())?;

    let defaults = SolverOptions::default();
    let solver = match root.get("solver") {
        Some(v) => {
            let o = Obj::new(v, &root.child("solver"))?;
            o.allow(&["k_max", "damping", "max_iter", "picard_tol", "lattice_tol"])?;
            let opts = SolverOptions {
                k_max: o.uint("k_max", defaults.k_max)?,
                damping: o.number("damping", defaults.damping)?,
                max_iter: o.uint("max_iter", defaults.max_iter)?,
                picard_tol: o.number("picard_tol", defaults.picard_tol)?,
                lattice_tol: o.number("lattice_tol", defaults.lattice_tol)?,
                band: None,
            };
            opts.validate()
                .map_err(|e| CliError::schema("/solver", e.to_string()))?;
            opts
        }
        None => defaults,
    };

    let refine_depth = match root.get("kernel") {
        Some(v) => {
            let o = Obj::new(v, "/kernel")?;
            o.allow(&["refine_depth"])?;
            let d = o.uint("refine_depth", hypotorus::kernel::DEFAULT_REFINE_DEPTH)?;
            if !(MIN_REFINE_DEPTH..=MAX_REFINE_DEPTH).contains(&d) {
                return Err(CliError::schema(
                    "/kernel/refine_depth",
                    format!("{d} outside [{MIN_REFINE_DEPTH}, {MAX_REFINE_DEPTH}]"),
                ));
            }
            d
        }
        None => hypotorus::kernel::DEFAULT_REFINE_DEPTH,
    };

    let theta_tol = match root.get("theta") {
        Some(v) => {
            let o = Obj::new(v, "/theta")?;
            o.allow(&["tol"])?;
            let t = o.number("tol", 1e-14)?;
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::schema("/theta/tol", "must lie in (0, 1)"));
            }
            t
        }
        None => 1e-14,
    };

    Ok(CaseConfig {
        field,
        grid_n,
        equation,
        rhs,
        solver,
        refine_depth,
        theta_tol,
    })
}

fn parse_field(value: &Value, ptr: &str) -> CliResult<FieldSpec> {
    let o = Obj::new(value, ptr)?;
    if let Some(name) = o.string("builtin")? {
        o.allow(&["builtin"])?;
        return FieldSpec::builtin(name).map_err(|_| {
            CliError::schema(
                o.child("builtin"),
                format!(
                    "unknown builtin `{name}`; expected one of {}",
                    hypotorus::field::BUILTIN_NAMES.join(", ")
                ),
            )
        });
    }
    o.allow(&["a", "b", "z_exact", "sigma"])?;
    let a = o
        .expr("a")?
        .ok_or_else(|| CliError::schema(o.child("a"), "missing required key"))?;
    let b = o
        .expr("b")?
        .ok_or_else(|| CliError::schema(o.child("b"), "missing required key"))?;
    let mut spec = FieldSpec::new("custom", a, b);
    if let Some(z) = o.expr("z_exact")? {
        spec = spec.with_exact(z);
    }
    match o.get("sigma") {
        None => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let item_ptr = format!("{}/{i}", o.child("sigma"));
                let c = Obj::new(item, &item_ptr)?;
                c.allow(&["sigma_i", "hint"])?;
                let sigma = match c.get("sigma_i") {
                    Some(v) => v.as_f64().filter(|s| *s >= 0.0).ok_or_else(|| {
                        CliError::schema(c.child("sigma_i"), "expected a non-negative number")
                    })?,
                    None => {
                        return Err(CliError::schema(c.child("sigma_i"), "missing required key"))
                    }
                };
                let hint = c
                    .string("hint")?
                    .ok_or_else(|| CliError::schema(c.child("hint"), "missing required key"))?;
                let component = SigmaComponent::new(hint, sigma, hint);
                if component.curve().is_none() {
                    return Err(CliError::schema(
                        c.child("hint"),
                        format!("`{hint}` is not of the form `y=c` or `x=c`"),
                    ));
                }
                spec = spec.with_component(component);
            }
        }
        Some(_) => return Err(CliError::schema(o.child("sigma"), "expected an array")),
    }
    spec.validate()
        .map_err(|e| CliError::schema(display_ptr(ptr), e.to_string()))?;
    Ok(spec)
}

fn parse_rhs(value: &Value, ptr: &str) -> CliResult<RhsConfig> {
    let o = Obj::new(value, ptr)?;
    o.allow(&["f", "A", "B", "manufactured_w"])?;
    Ok(RhsConfig {
        f: o.expr("f")?,
        a: o.expr("A")?,
        b: o.expr("B")?,
        manufactured_w: o.expr("manufactured_w")?,
    })
}

/// Enforces that exactly the right-hand sides used by `equation` are given.
fn check_rhs_keys(equation: Option<Equation>, rhs: &RhsConfig, has_rhs: bool) -> CliResult<()> {
    let Some(eq) = equation else {
        if has_rhs {
            return Err(CliError::schema("/rhs", "rhs given without an equation"));
        }
        return Ok(());
    };
    let w = rhs.manufactured_w.is_some();
    let unused = |key: &str| {
        CliError::schema(
            format!("/rhs/{key}"),
            format!("not used by equation \"{}\"", eq.name()),
        )
    };
    let missing = |key: &str| CliError::schema(format!("/rhs/{key}"), "missing required key");
    match eq {
        Equation::F => {
            if rhs.a.is_some() {
                return Err(unused("A"));
            }
            if rhs.b.is_some() {
                return Err(unused("B"));
            }
            if rhs.f.is_none() && !w {
                return Err(missing("f"));
            }
        }
        Equation::A => {
            if rhs.f.is_some() {
                return Err(unused("f"));
            }
            if rhs.b.is_some() {
                return Err(unused("B"));
            }
            if rhs.a.is_none() && !w {
                return Err(missing("A"));
            }
        }
        Equation::Ab => {
            if rhs.f.is_some() {
                return Err(unused("f"));
            }
            if rhs.b.is_none() {
                return Err(missing("B"));
            }
            if rhs.a.is_none() && !w {
                return Err(missing("A"));
            }
        }
    }
    Ok(())
}
