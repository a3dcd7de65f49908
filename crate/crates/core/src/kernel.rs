//! The theta kernel `M(p, s)` and the Cauchy-Pompeiu type operator
//! `T_omega g(p) = (1/2 pi i) int_R M(s, p) g(s) dx dy`.
//!
//! Far cells use the midpoint rule on lattice-reduced differences. Cells whose
//! image under `Z` is large compared with their distance from the pole are
//! subdivided and integrated with a line rule that is exact in the dominant
//! direction of the linearised first integral. The cell containing the target
//! is handled by a ring recursion around the target.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{NormalizedField, ZMap};
use crate::grid::{cell_center, stencil, GridFunction};
use crate::lattice::TorusPoint;
use crate::quad::gauss_legendre;
use crate::theta::ThetaContext;

pub const DEFAULT_REFINE_DEPTH: usize = 6;
pub const MIN_REFINE_DEPTH: usize = 2;
pub const MAX_REFINE_DEPTH: usize = 12;
/// Largest grid for which `T_omega` is assembled as a dense matrix.
pub const DENSE_LIMIT: usize = 64;

/// A cell is far when its half-extent in `Z` is below this fraction of its
/// distance from the pole.
const ETA_FAR: f64 = 0.25;
/// The line rule is accepted when the transverse half-extent is below this
/// multiple of the distance from the pole to the exact segment.
const ETA_LINE: f64 = 1.0;
const LINE_NODES: usize = 6;
/// Adaptive splitting may go this many levels below the ring depth.
const EXTRA_LEVELS: i32 = 4;
const SINGULAR_TOL: f64 = 1e-12;

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

fn line_rule_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(LINE_NODES))
}

/// Everything needed to evaluate `M` and `T_omega` on an `n x n` grid.
#[derive(Debug)]
pub struct KernelContext {
    nf: NormalizedField,
    zmap: ZMap,
    theta: ThetaContext,
    z0: Complex64,
    n: usize,
    refine_depth: usize,
    /// `Z` at the cell centres.
    z_cells: Vec<Complex64>,
    /// `max(|a|, |b|) h / 2` at the cell centres.
    ext_cells: Vec<f64>,
    dense: OnceLock<Vec<Complex64>>,
}

/// Cell layout used for one target: centres (reduced to `R`), their `Z`
/// values and half-extents, and how cell values are read from the grid.
struct Partition<'a> {
    centers: Vec<TorusPoint>,
    z: std::borrow::Cow<'a, [Complex64]>,
    ext: std::borrow::Cow<'a, [f64]>,
    /// `None` when the centres are the grid's own cell centres.
    stencils: Option<Vec<[(usize, f64); 4]>>,
    singular: usize,
}

struct Target {
    p: TorusPoint,
    zp: Complex64,
    depth: usize,
    min_half: f64,
}

struct Row<'a> {
    n: usize,
    w: &'a mut [Complex64],
}

impl Row<'_> {
    fn add_point(&mut self, p: TorusPoint, v: Complex64) {
        for (idx, s) in stencil(self.n, p.x, p.y) {
            if s != 0.0 {
                self.w[idx] += v * s;
            }
        }
    }
}

impl KernelContext {
    pub fn new(
        nf: &NormalizedField,
        n: usize,
        refine_depth: usize,
        theta_tol: f64,
    ) -> Result<Self> {
        if !(MIN_REFINE_DEPTH..=MAX_REFINE_DEPTH).contains(&refine_depth) {
            return Err(Error::InvalidArgument(format!(
                "refine_depth {refine_depth} outside [{MIN_REFINE_DEPTH}, {MAX_REFINE_DEPTH}]"
            )));
        }
        if n < crate::grid::MIN_GRID {
            return Err(Error::InvalidArgument(format!(
                "grid resolution {n} is too small"
            )));
        }
        let theta = ThetaContext::new(nf.lattice, theta_tol)?;
        let zmap = ZMap::new(nf)?;
        let h = 1.0 / n as f64;
        let mut z_cells = Vec::with_capacity(n * n);
        let mut ext_cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let c = cell_center(n, i, j);
                z_cells.push(zmap.eval(c)?);
                let (a, b) = zmap.coeffs(c)?;
                ext_cells.push(a.norm().max(b.norm()) * h / 2.0);
            }
        }
        let z0 = nf.lattice.reduce(theta.z0())?.w;
        Ok(Self {
            nf: nf.clone(),
            zmap,
            theta,
            z0,
            n,
            refine_depth,
            z_cells,
            ext_cells,
            dense: OnceLock::new(),
        })
    }

    pub fn field(&self) -> &NormalizedField {
        &self.nf
    }

    pub fn zmap(&self) -> &ZMap {
        &self.zmap
    }

    pub fn theta(&self) -> &ThetaContext {
        &self.theta
    }

    pub fn z0(&self) -> Complex64 {
        self.z0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn refine_depth(&self) -> usize {
        self.refine_depth
    }

    /// `Z` at the centre of cell `(i, j)`.
    pub fn z_cell(&self, i: usize, j: usize) -> Complex64 {
        self.z_cells[i * self.n + j]
    }

    /// `Z` sampled at the cell centres.
    pub fn z_grid(&self) -> GridFunction {
        GridFunction::new(self.n, self.z_cells.clone()).expect("finite first integral")
    }

    /// `Theta'/Theta (z0 + zeta)` for arbitrary `zeta`.
    fn g_full(&self, zeta: Complex64) -> Complex64 {
        let r = self.nf.lattice.reduce_centered(zeta);
        self.theta.shifted_log_deriv(r.w) - TWO_PI_I * r.k as f64
    }

    /// Regular part `G(zeta) - 1/zeta` near the pole.
    fn regular_part(&self, zeta: Complex64) -> Complex64 {
        if zeta.norm() < 1e-6 {
            Complex64::new(0.0, -PI)
        } else {
            self.g_full(zeta) - 1.0 / zeta
        }
    }

    fn target(&self, p: TorusPoint, zp: Complex64) -> Target {
        let h = 1.0 / self.n as f64;
        let bonus = self
            .nf
            .nearby_sigma(p, 2.0 * h)
            .map_or(0, |s| (s / 2.0).ceil() as usize);
        let depth = self.refine_depth + bonus;
        Target {
            p,
            zp,
            depth,
            min_half: 0.5 * h * 2f64.powi(-(depth as i32) - EXTRA_LEVELS),
        }
    }

    fn grid_partition(&self, singular: usize) -> Partition<'_> {
        let n = self.n;
        Partition {
            centers: (0..n * n).map(|c| cell_center(n, c / n, c % n)).collect(),
            z: std::borrow::Cow::Borrowed(&self.z_cells),
            ext: std::borrow::Cow::Borrowed(&self.ext_cells),
            stencils: None,
            singular,
        }
    }

    /// Cells of side `h` centred at `p + h (m, l)`.
    fn shifted_partition(&self, p: TorusPoint) -> Result<Partition<'static>> {
        let n = self.n;
        let h = 1.0 / n as f64;
        let mut centers = Vec::with_capacity(n * n);
        let mut z = Vec::with_capacity(n * n);
        let mut ext = Vec::with_capacity(n * n);
        let mut stencils = Vec::with_capacity(n * n);
        for m in 0..n {
            for l in 0..n {
                let (c, _, _) = TorusPoint::new(p.x + h * m as f64, p.y + h * l as f64).reduce();
                z.push(self.zmap.eval(c)?);
                let (a, b) = self.zmap.coeffs(c)?;
                ext.push(a.norm().max(b.norm()) * h / 2.0);
                stencils.push(stencil(n, c.x, c.y));
                centers.push(c);
            }
        }
        Ok(Partition {
            centers,
            z: std::borrow::Cow::Owned(z),
            ext: std::borrow::Cow::Owned(ext),
            stencils: Some(stencils),
            singular: 0,
        })
    }

    /// Weights `w` with `T_omega g(p) = sum_c w_c g_c`.
    fn fill_row(&self, target: &Target, part: &Partition<'_>, out: &mut [Complex64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let n = self.n;
        let h = 1.0 / n as f64;
        let area = h * h;
        let mut row = Row { n, w: out };
        for c in 0..n * n {
            let zeta = target.zp - part.z[c];
            let r = self.nf.lattice.reduce_centered(zeta);
            let far = c != part.singular && part.ext[c] <= ETA_FAR * r.w.norm();
            let weight = if far {
                (self.theta.shifted_log_deriv(r.w) - TWO_PI_I * r.k as f64) * area
            } else {
                // the local copy differs from the cell in R by a deck
                // transformation, which shifts the kernel by 2 pi i k
                -TWO_PI_I * r.k as f64 * area
            };
            match &part.stencils {
                None => row.w[c] += weight,
                Some(st) => {
                    for (idx, s) in st[c] {
                        row.w[idx] += weight * s;
                    }
                }
            }
            if far {
                continue;
            }
            if c == part.singular {
                self.singular_box(target, 0.5 * h, 0, &mut row)?;
            } else {
                let local = part.centers[c].shifted(r.j, r.k);
                self.near_cell(target, local, 0.5 * h, 0.5 * h, &mut row)?;
            }
        }
        let scale = 1.0 / TWO_PI_I;
        row.w.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    /// Ring recursion on the square of half-width `half` centred at the target.
    fn singular_box(&self, t: &Target, half: f64, level: usize, row: &mut Row<'_>) -> Result<()> {
        if level >= t.depth {
            let (a, b) = self.zmap.coeffs(t.p)?;
            return self.line_rule(t, t.p, half, half, a.norm() >= b.norm(), row);
        }
        let q = half / 4.0;
        for ix in [-3.0, -1.0, 1.0, 3.0] {
            for iy in [-3.0, -1.0, 1.0, 3.0] {
                if f64::abs(ix) < 2.0 && f64::abs(iy) < 2.0 {
                    continue;
                }
                let c = TorusPoint::new(t.p.x + ix * q, t.p.y + iy * q);
                self.near_cell(t, c, q, q, row)?;
            }
        }
        self.singular_box(t, half / 2.0, level + 1, row)
    }

    /// Adaptive integration over a cell not containing the target.
    fn near_cell(
        &self,
        t: &Target,
        c: TorusPoint,
        hx: f64,
        hy: f64,
        row: &mut Row<'_>,
    ) -> Result<()> {
        let zeta = t.zp - self.zmap.eval(c)?;
        let (a, b) = self.zmap.coeffs(c)?;
        let ex = a.norm() * hx;
        let ey = b.norm() * hy;
        if ex.max(ey) <= ETA_FAR * zeta.norm() {
            row.add_point(c, self.g_full(zeta) * (4.0 * hx * hy));
            return Ok(());
        }
        let (along_x, along, across) = if ex >= ey {
            (true, a * hx, ey)
        } else {
            (false, b * hy, ex)
        };
        let dist = segment_distance(zeta, along);
        if across <= ETA_LINE * dist || hx.max(hy) <= t.min_half {
            return self.line_rule(t, c, hx, hy, along_x, row);
        }
        let (qx, qy) = (hx / 2.0, hy / 2.0);
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                let sub = TorusPoint::new(c.x + sx * qx, c.y + sy * qy);
                self.near_cell(t, sub, qx, qy, row)?;
            }
        }
        Ok(())
    }

    /// Gauss-Legendre across, exact integral of the linearised pole along.
    fn line_rule(
        &self,
        t: &Target,
        c: TorusPoint,
        hx: f64,
        hy: f64,
        along_x: bool,
        row: &mut Row<'_>,
    ) -> Result<()> {
        let (nodes, weights) = line_rule_nodes();
        let (half, other) = if along_x { (hx, hy) } else { (hy, hx) };
        for (node, w) in nodes.iter().zip(weights) {
            let pt = if along_x {
                TorusPoint::new(c.x, c.y + hy * node)
            } else {
                TorusPoint::new(c.x + hx * node, c.y)
            };
            let zeta = t.zp - self.zmap.eval(pt)?;
            let coef = if along_x {
                self.zmap.coeff_a(pt)?
            } else {
                self.zmap.coeff_b(pt)?
            };
            let pole = pole_line_integral(zeta, coef, half);
            let value = (pole + self.regular_part(zeta) * (2.0 * half)) * (w * other);
            row.add_point(pt, value);
        }
        Ok(())
    }

    fn target_for_cell(&self, c: usize) -> Target {
        self.target(cell_center(self.n, c / self.n, c % self.n), self.z_cells[c])
    }

    /// Dense row-major matrix of `T_omega` (built once, cached).
    fn dense(&self) -> Result<&[Complex64]> {
        if let Some(m) = self.dense.get() {
            return Ok(m);
        }
        let nn = self.n * self.n;
        let mut m = vec![Complex64::new(0.0, 0.0); nn * nn];
        m.par_chunks_mut(nn)
            .enumerate()
            .map(|(c, out)| {
                let part = self.grid_partition(c);
                self.fill_row(&self.target_for_cell(c), &part, out)
            })
            .collect::<Result<Vec<()>>>()?;
        let _ = self.dense.set(m);
        Ok(self.dense.get().expect("just set"))
    }

    /// Whether [`KernelContext::apply_many`] uses a cached dense matrix.
    pub fn is_dense(&self) -> bool {
        self.n <= DENSE_LIMIT
    }

    /// `T_omega` applied to several grid functions at once.
    pub fn apply_many(&self, gs: &[&GridFunction]) -> Result<Vec<GridFunction>> {
        let n = self.n;
        let nn = n * n;
        for g in gs {
            if g.n() != n {
                return Err(Error::InvalidArgument(format!(
                    "grid function has n = {}, operator has n = {n}",
                    g.n()
                )));
            }
        }
        let results: Vec<Vec<Complex64>> = if self.is_dense() {
            let m = self.dense()?;
            (0..nn)
                .into_par_iter()
                .map(|c| {
                    let r = &m[c * nn..(c + 1) * nn];
                    gs.iter().map(|g| dot(r, g.values())).collect()
                })
                .collect()
        } else {
            (0..nn)
                .into_par_iter()
                .map_init(
                    || vec![Complex64::new(0.0, 0.0); nn],
                    |buf, c| -> Result<Vec<Complex64>> {
                        let part = self.grid_partition(c);
                        self.fill_row(&self.target_for_cell(c), &part, buf)?;
                        Ok(gs.iter().map(|g| dot(buf, g.values())).collect())
                    },
                )
                .collect::<Result<Vec<_>>>()?
        };
        (0..gs.len())
            .map(|k| GridFunction::new(n, results.iter().map(|r| r[k]).collect()))
            .collect()
    }

    pub fn apply(&self, g: &GridFunction) -> Result<GridFunction> {
        Ok(self.apply_many(&[g])?.remove(0))
    }

    /// `T_omega g` at an arbitrary point of the plane.
    pub fn apply_at(&self, g: &GridFunction, p: TorusPoint) -> Result<Complex64> {
        Ok(self.apply_at_many(&[g], p)?[0])
    }

    /// `T_omega g` at `p` for several grid functions.
    pub fn apply_at_many(&self, gs: &[&GridFunction], p: TorusPoint) -> Result<Vec<Complex64>> {
        for g in gs {
            if g.n() != self.n {
                return Err(Error::InvalidArgument(format!(
                    "grid function has n = {}, operator has n = {}",
                    g.n(),
                    self.n
                )));
            }
        }
        if !p.is_finite() {
            return Err(Error::InvalidArgument(format!("point {p:?} is not finite")));
        }
        let part = self.shifted_partition(p)?;
        let target = self.target(p, self.zmap.eval(p)?);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        self.fill_row(&target, &part, &mut buf)?;
        Ok(gs.iter().map(|g| dot(&buf, g.values())).collect())
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Distance from the origin to the segment `{zeta + t v : |t| <= 1}`.
fn segment_distance(zeta: Complex64, v: Complex64) -> f64 {
    let vv = v.norm_sqr();
    if vv == 0.0 {
        return zeta.norm();
    }
    let t = (-(zeta * v.conj()).re / vv).clamp(-1.0, 1.0);
    (zeta + v * t).norm()
}

/// `int_{-half}^{half} dt / (zeta - c t)`.
fn pole_line_integral(zeta: Complex64, c: Complex64, half: f64) -> Complex64 {
    if zeta == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let u = c * half / zeta;
    let un = u.norm();
    if un < 1e-3 {
        let u2 = u * u;
        (2.0 * half / zeta) * (1.0 + u2 / 3.0 + u2 * u2 / 5.0)
    } else {
        ((1.0 + u) / (1.0 - u)).ln() / c
    }
}

/// `M(p, s) = (Theta'/Theta)(Z(s) - Z(p) + z0)`.
pub fn kernel_m(ctx: &KernelContext, p: TorusPoint, s: TorusPoint) -> Result<Complex64> {
    let zeta = ctx.zmap.eval(s)? - ctx.zmap.eval(p)?;
    let r = ctx.nf.lattice.reduce_centered(zeta);
    if r.w.norm() < SINGULAR_TOL {
        return Err(Error::SingularConfiguration);
    }
    Ok(ctx.theta.shifted_log_deriv(r.w) - TWO_PI_I * r.k as f64)
}

/// `T_omega g` at every cell centre.
pub fn t_omega(ctx: &KernelContext, g: &GridFunction) -> Result<GridFunction> {
    ctx.apply(g)
}

/// `T_omega g` at a single point.
pub fn t_omega_point(ctx: &KernelContext, g: &GridFunction, p: TorusPoint) -> Result<Complex64> {
    ctx.apply_at(g, p)
}
