//! Solution grids as CSV and solve reports as JSON.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hypotorus::GridFunction;
use serde::Serialize;

use crate::case::{complex_parts, Outcome};
use crate::config::Equation;
use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "x,y,re_u,im_u";

/// CSV text with one row per cell centre, `x` index outermost.
pub fn grid_csv(u: Option<&GridFunction>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    if let Some(u) = u {
        for (i, j, p) in u.points() {
            let v = u.get(i, j);
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, v.re, v.im);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportJson {
    pub solvable: String,
    pub j: Option<i64>,
    pub k: Option<i64>,
    pub nu_re: Option<f64>,
    pub nu_im: Option<f64>,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub iterations: usize,
    pub offset_constancy: Option<f64>,
    pub min_abs_u: Option<f64>,
    pub grid_n: usize,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

impl ReportJson {
    pub fn from_outcome(o: &Outcome, grid_n: usize) -> Self {
        let r = &o.report;
        let (nu_re, nu_im) = complex_parts(r.nu);
        let has_u = o.u.is_some();
        Self {
            solvable: r.solvable.to_string(),
            j: r.j,
            k: r.k,
            nu_re,
            nu_im,
            residual_sup: r.residual_sup,
            residual_l2: r.residual_l2,
            iterations: r.iterations,
            offset_constancy: (has_u && o.equation != Equation::F).then_some(r.offset_constancy),
            min_abs_u: has_u.then_some(r.min_abs_u),
            grid_n,
            wall_time_s: o.wall_time_s,
            notes: r.notes.clone(),
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `prefix.u.csv` and `prefix.report.json`; returns their paths.
pub fn write_outputs(prefix: &Path, o: &Outcome, grid_n: usize) -> CliResult<(PathBuf, PathBuf)> {
    let csv = with_suffix(prefix, ".u.csv");
    let json = with_suffix(prefix, ".report.json");
    write(&csv, &grid_csv(o.u.as_ref()))?;
    let report = ReportJson::from_outcome(o, grid_n);
    let text = serde_json::to_string_pretty(&report).expect("report serialises");
    write(&json, &(text + "\n"))?;
    Ok((csv, json))
}
