use super::{FieldSpec, SigmaComponent};
use crate::error::{Error, Result};
use crate::expr::parse_expr;

pub const BUILTIN_NAMES: [&str; 4] = [
    "elliptic",
    "degenerate_sin2",
    "analytic_perturbed",
    "degenerate_2d",
];

impl FieldSpec {
    /// One of the named example forms.
    ///
    /// * `elliptic`: `dx + i dy`, no characteristic set.
    /// * `degenerate_sin2`: `dx + i sin^2(pi y) dy`, order 2 along `y in Z`.
    /// * `analytic_perturbed`: `dZ` with `Z = x + i y + 0.05 sin(2 pi (x + y))`.
    /// * `degenerate_2d`: `dZ` with
    ///   `Z = x + 0.05 sin(2 pi x) sin^2(pi y) + i (y/2 - sin(2 pi y)/(4 pi))`.
    pub fn builtin(name: &str) -> Result<FieldSpec> {
        let p = |s: &str| parse_expr(s).expect("builtin expression parses");
        let along_y0 = || SigmaComponent::new("y in Z", 2.0, "y=0");
        let spec = match name {
            "elliptic" => FieldSpec::new(name, p("1"), p("i")),
            "degenerate_sin2" => FieldSpec::new(name, p("1"), p("i*sin(pi*y)^2"))
                .with_exact(p("x + i*(y/2 - sin(2*pi*y)/(4*pi))"))
                .with_component(along_y0()),
            "analytic_perturbed" => FieldSpec::new(
                name,
                p("1 + 2*pi*0.05*cos(2*pi*(x+y))"),
                p("i + 2*pi*0.05*cos(2*pi*(x+y))"),
            )
            .with_exact(p("x + i*y + 0.05*sin(2*pi*(x+y))")),
            "degenerate_2d" => FieldSpec::new(
                name,
                p("1 + 2*pi*0.05*cos(2*pi*x)*sin(pi*y)^2"),
                p("0.05*pi*sin(2*pi*x)*sin(2*pi*y) + i*sin(pi*y)^2"),
            )
            .with_exact(p(
                "x + 0.05*sin(2*pi*x)*sin(pi*y)^2 + i*(y/2 - sin(2*pi*y)/(4*pi))",
            ))
            .with_component(along_y0()),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown builtin field `{other}` (expected one of {})",
                    BUILTIN_NAMES.join(", ")
                )))
            }
        };
        Ok(spec)
    }
}
