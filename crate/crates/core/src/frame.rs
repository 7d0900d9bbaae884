//! The λ-family of flat connections `α^λ = U dz + V dz̄`, extended frames `dF = F α^λ`,
//! loop holonomy on cylinders and the untwisting gauge.
//!
//! Entries of the connection for data `(u, Q, s)` with `κ = 1/(2cosh(s/2))`:
//!
//! ```text
//! U = [[−u_z/4, λ⁻¹κQe^{−u/2}], [λ⁻¹κe^{u/2}, u_z/4]]
//! V = [[u_z̄/4, λκe^{u/2}], [λκQ̄e^{−u/2}, −u_z̄/4]]
//! ```
//!
//! Flatness is equivalent to the structure equations, and on `|λ| = 1` the form takes
//! values in `su(1,1) = {X : X e₁ + e₁ X* = 0}`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{basis, c, mat2, Mat2C, SL2C};
use crate::diff::{Differ, MARGIN};
use crate::error::{Error, Result};
use crate::gauss::MetricData;
use crate::grid::{interior, DomainGrid, Field};
use crate::magnus::magnus_step;

/// Flatness required before a frame is integrated.
pub const FLATNESS_LIMIT: f64 = 1e-6;

fn zero() -> Mat2C {
    Mat2C::zeros()
}

fn scale(m: &Mat2C, s: Complex64) -> Mat2C {
    m.map(|v| v * s)
}

fn upper(m: &Mat2C) -> Mat2C {
    mat2(c(0.0, 0.0), m[(0, 1)], c(0.0, 0.0), c(0.0, 0.0))
}

fn lower(m: &Mat2C) -> Mat2C {
    mat2(c(0.0, 0.0), c(0.0, 0.0), m[(1, 0)], c(0.0, 0.0))
}

/// Laurent coefficients of `α^λ`: `U = λ⁻¹A₋ + A₀ + λA₊`, `V = λ⁻¹B₋ + B₀ + λB₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionForm {
    pub grid: DomainGrid,
    /// `[A₋, A₀, A₊]` (dz part).
    pub a: [Field<Mat2C>; 3],
    /// `[B₋, B₀, B₊]` (dz̄ part).
    pub b: [Field<Mat2C>; 3],
}

impl ConnectionForm {
    pub fn zero(grid: &DomainGrid) -> Self {
        let f = Field::filled(grid.nx, grid.ny, zero());
        ConnectionForm { grid: *grid, a: [f.clone(), f.clone(), f.clone()], b: [f.clone(), f.clone(), f] }
    }

    /// Same coefficients at every node.
    pub fn constant(grid: &DomainGrid, a: [Mat2C; 3], b: [Mat2C; 3]) -> Self {
        let f = |m: Mat2C| Field::filled(grid.nx, grid.ny, m);
        ConnectionForm { grid: *grid, a: a.map(f), b: b.map(f) }
    }

    #[inline]
    pub fn dz_part(&self, i: usize, j: usize, lambda: Complex64) -> Mat2C {
        laurent(&self.a, i, j, lambda)
    }

    #[inline]
    pub fn dzbar_part(&self, i: usize, j: usize, lambda: Complex64) -> Mat2C {
        laurent(&self.b, i, j, lambda)
    }

    /// `(A_x, A_y) = (U + V, i(U − V))`, so that `α = A_x dx + A_y dy`.
    pub fn axis_parts(&self, i: usize, j: usize, lambda: Complex64) -> (Mat2C, Mat2C) {
        let u = self.dz_part(i, j, lambda);
        let v = self.dzbar_part(i, j, lambda);
        (u + v, scale(&(u - v), c(0.0, 1.0)))
    }

    fn axis_fields(&self, lambda: Complex64) -> (Field<Mat2C>, Field<Mat2C>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let parts: Vec<(Mat2C, Mat2C)> =
            (0..nx * ny).into_par_iter().map(|p| self.axis_parts(p % nx, p / nx, lambda)).collect();
        (
            Field { nx, ny, data: parts.iter().map(|p| p.0).collect() },
            Field { nx, ny, data: parts.iter().map(|p| p.1).collect() },
        )
    }

    /// Largest trace of any coefficient.
    pub fn trace_defect(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .flat_map(|f| f.data.iter())
            .map(|m| (m[(0, 0)] + m[(1, 1)]).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry violating the twisted pattern: diagonals only at λ⁰, off-diagonals
    /// only at λ^{±1}.
    pub fn twist_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for blocks in [&self.a, &self.b] {
            for (k, f) in blocks.iter().enumerate() {
                for m in &f.data {
                    let (diag, off) = ((m[(0, 0)].norm()).max(m[(1, 1)].norm()), (m[(0, 1)].norm()).max(m[(1, 0)].norm()));
                    worst = worst.max(if k == 1 { off } else { diag });
                }
            }
        }
        worst
    }

    /// Sup over nodes of `|A_x e₁ + e₁ A_x*| + |A_y e₁ + e₁ A_y*|` at `λ`.
    pub fn reality_defect(&self, lambda: Complex64) -> f64 {
        let e1 = basis()[1];
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        (0..nx * ny)
            .map(|p| {
                let (ax, ay) = self.axis_parts(p % nx, p / nx, lambda);
                (ax * e1 + e1 * ax.adjoint()).norm() + (ay * e1 + e1 * ay.adjoint()).norm()
            })
            .fold(0.0, f64::max)
    }
}

#[inline]
fn laurent(blocks: &[Field<Mat2C>; 3], i: usize, j: usize, lambda: Complex64) -> Mat2C {
    scale(blocks[0].get(i, j), lambda.inv()) + blocks[1].get(i, j) + scale(blocks[2].get(i, j), lambda)
}

/// Connection of the data `(u, Q, s)`; `u_z` is taken with the grid's high-order derivatives.
pub fn build_connection(m: &MetricData) -> ConnectionForm {
    let g = &m.grid;
    let uz = Differ::new(g).d_z(&m.u.to_complex());
    let kappa = m.kappa();
    let o = c(0.0, 0.0);
    let (nx, ny) = (g.nx, g.ny);
    let mut a = [Field::filled(nx, ny, zero()), Field::filled(nx, ny, zero()), Field::filled(nx, ny, zero())];
    let mut b = a.clone();
    for j in 0..ny {
        for i in 0..nx {
            let u = *m.u.get(i, j);
            let q = *m.q.get(i, j);
            let (ep, em) = ((0.5 * u).exp(), (-0.5 * u).exp());
            let z = *uz.get(i, j) * 0.25;
            *a[0].get_mut(i, j) = mat2(o, q * (kappa * em), c(kappa * ep, 0.0), o);
            *a[1].get_mut(i, j) = mat2(-z, o, o, z);
            *b[1].get_mut(i, j) = mat2(z.conj(), o, o, -z.conj());
            *b[2].get_mut(i, j) = mat2(o, c(kappa * ep, 0.0), q.conj() * (kappa * em), o);
        }
    }
    ConnectionForm { grid: *g, a, b }
}

fn entry_field(f: &Field<Mat2C>, r: usize, col: usize) -> Field<Complex64> {
    f.map(|m| m[(r, col)])
}

/// Field of the Maurer–Cartan 2-form coefficient `∂_z V − ∂_z̄ U + [U, V]` at `λ`.
pub fn flatness_field(conn: &ConnectionForm, lambda: Complex64) -> Field<Mat2C> {
    let g = &conn.grid;
    let d = Differ::new(g);
    let (nx, ny) = (g.nx, g.ny);
    let u = Field::from_fn(nx, ny, |i, j| conn.dz_part(i, j, lambda));
    let v = Field::from_fn(nx, ny, |i, j| conn.dzbar_part(i, j, lambda));
    let mut out = u.zip_map(&v, |a, b| a * b - b * a);
    for r in 0..2 {
        for col in 0..2 {
            let dv = d.d_z(&entry_field(&v, r, col));
            let du = d.d_zbar(&entry_field(&u, r, col));
            for p in 0..nx * ny {
                out.data[p][(r, col)] += dv.data[p] - du.data[p];
            }
        }
    }
    out
}

/// Sup-norm of the Maurer–Cartan 2-form over nodes where centered stencils fit.
pub fn flatness_residual(conn: &ConnectionForm, lambda: Complex64) -> f64 {
    let f = flatness_field(conn, lambda);
    interior(&conn.grid, MARGIN).map(|(i, j)| f.get(i, j).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Along the basepoint column, then along every row.
    ColumnFirst,
    /// Along the basepoint row, then along every column.
    RowFirst,
}

#[derive(Debug, Clone, Copy)]
pub struct FrameOptions {
    pub sweep: Sweep,
    /// Columns integrated past `nx` on cylinders (`F` on the next sheet of the cover).
    pub extra_columns: usize,
    /// `None` skips the flatness precondition.
    pub flatness_limit: Option<f64>,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions { sweep: Sweep::ColumnFirst, extra_columns: 0, flatness_limit: Some(FLATNESS_LIMIT) }
    }
}

/// `F` with `F⁻¹dF = α^λ` and `F(basepoint) = id`. On cylinders the field may be wider
/// than `nx`; column `i ≥ nx` lies over `x + Lx`.
#[derive(Debug, Clone)]
pub struct ExtendedFrame {
    pub lambda: Complex64,
    pub grid: DomainGrid,
    pub basepoint: (usize, usize),
    pub frames: Field<SL2C>,
}

impl ExtendedFrame {
    pub fn get(&self, i: usize, j: usize) -> &SL2C {
        self.frames.get(i, j)
    }

    pub fn width(&self) -> usize {
        self.frames.nx
    }

    pub fn max_det_error(&self) -> f64 {
        self.frames.data.iter().map(|f| (f.det() - 1.0).norm()).fold(0.0, f64::max)
    }

    /// Sup of `|F* e₁ F − e₁|`; small when `|λ| = 1`.
    pub fn reality_error(&self) -> f64 {
        let e1 = basis()[1];
        self.frames
            .data
            .iter()
            .map(|f| (f.matrix().adjoint() * e1 * f.matrix() - e1).norm())
            .fold(0.0, f64::max)
    }

    /// CSV rows `i,j,Re F11,Im F11,Re F12,Im F12,Re F21,Im F21,Re F22,Im F22`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,ReF11,ImF11,ReF12,ImF12,ReF21,ImF21,ReF22,ImF22")?;
        for j in 0..self.frames.ny {
            for i in 0..self.frames.nx {
                let m = self.get(i, j).matrix();
                write!(w, "{i},{j}")?;
                for v in [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]] {
                    write!(w, ",{:.17e},{:.17e}", v.re, v.im)?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn renormalize(m: Mat2C) -> SL2C {
    SL2C::normalize(m).unwrap_or_else(|_| SL2C::from_unchecked(m))
}

struct Stepper<'a> {
    grid: &'a DomainGrid,
    ax: Field<Mat2C>,
    ay: Field<Mat2C>,
}

impl Stepper<'_> {
    fn x_step(&self, a: isize, j: usize) -> Mat2C {
        let g = self.grid;
        let nx = g.nx as isize;
        let sample = |k: isize| *self.ax.get(k.rem_euclid(nx) as usize, j);
        magnus_step(sample, a, g.nx, g.is_periodic(), g.hx())
    }

    fn y_step(&self, i: usize, a: isize) -> Mat2C {
        let g = self.grid;
        let i = i % g.nx;
        let sample = |k: isize| *self.ay.get(i, k as usize);
        magnus_step(sample, a, g.ny, false, g.hy())
    }
}

/// Integrates the frame with the default options.
pub fn integrate_frame(conn: &ConnectionForm, lambda: Complex64, basepoint: (usize, usize)) -> Result<ExtendedFrame> {
    integrate_frame_with(conn, lambda, basepoint, FrameOptions::default())
}

pub fn integrate_frame_with(
    conn: &ConnectionForm,
    lambda: Complex64,
    basepoint: (usize, usize),
    opts: FrameOptions,
) -> Result<ExtendedFrame> {
    let g = &conn.grid;
    let (i0, j0) = basepoint;
    if i0 >= g.nx || j0 >= g.ny {
        return Err(Error::InvalidArgument(format!("basepoint {basepoint:?} outside the grid")));
    }
    if lambda.norm() == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("spectral value {lambda} must be finite and nonzero")));
    }
    if let Some(limit) = opts.flatness_limit {
        let residual = flatness_residual(conn, lambda);
        if !(residual < limit) {
            return Err(Error::FlatnessTooLarge { residual, limit });
        }
    }
    let width = g.nx + if g.is_periodic() { opts.extra_columns } else { 0 };
    let (ax, ay) = conn.axis_fields(lambda);
    let st = Stepper { grid: g, ax, ay };
    let mut frames = Field::filled(width, g.ny, SL2C::identity());

    let fill_row = |frames: &mut Field<SL2C>, j: usize, i_start: usize| {
        for i in i_start + 1..width {
            let m = *frames.get(i - 1, j).matrix() * st.x_step(i as isize - 1, j);
            *frames.get_mut(i, j) = renormalize(m);
        }
        for i in (0..i_start).rev() {
            let inv = SL2C::from_unchecked(st.x_step(i as isize, j)).inverse();
            let m = *frames.get(i + 1, j).matrix() * inv.matrix();
            *frames.get_mut(i, j) = renormalize(m);
        }
    };
    let fill_col = |frames: &mut Field<SL2C>, i: usize, j_start: usize| {
        for j in j_start + 1..g.ny {
            let m = *frames.get(i, j - 1).matrix() * st.y_step(i, j as isize - 1);
            *frames.get_mut(i, j) = renormalize(m);
        }
        for j in (0..j_start).rev() {
            let inv = SL2C::from_unchecked(st.y_step(i, j as isize)).inverse();
            let m = *frames.get(i, j + 1).matrix() * inv.matrix();
            *frames.get_mut(i, j) = renormalize(m);
        }
    };
    match opts.sweep {
        Sweep::ColumnFirst => {
            fill_col(&mut frames, i0, j0);
            for j in 0..g.ny {
                fill_row(&mut frames, j, i0);
            }
        }
        Sweep::RowFirst => {
            fill_row(&mut frames, j0, i0);
            for i in 0..width {
                fill_col(&mut frames, i, j0);
            }
        }
    }
    Ok(ExtendedFrame { lambda, grid: *g, basepoint, frames })
}

/// Homotopy class of a loop on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopSpec {
    /// The generator of π₁ of a cylinder, traversed in `+x` along row `row`.
    XPeriod { row: usize },
    /// Boundary of the node rectangle `[i0, i1] × [j0, j1]`, counter-clockwise from
    /// `(i0, j0)`; null-homotopic.
    Rectangle { i0: usize, j0: usize, i1: usize, j1: usize },
}

/// Path-ordered transport around `lp`: the matrix `H` with `F(γ·z) = H F(z)` for a frame
/// based at the loop's starting node.
pub fn loop_holonomy(conn: &ConnectionForm, lambda: Complex64, lp: LoopSpec) -> Result<SL2C> {
    let residual = flatness_residual(conn, lambda);
    if !(residual < FLATNESS_LIMIT) {
        return Err(Error::FlatnessTooLarge { residual, limit: FLATNESS_LIMIT });
    }
    loop_holonomy_unchecked(conn, lambda, lp)
}

/// [`loop_holonomy`] without the flatness precondition.
pub fn loop_holonomy_unchecked(conn: &ConnectionForm, lambda: Complex64, lp: LoopSpec) -> Result<SL2C> {
    let g = &conn.grid;
    let (ax, ay) = conn.axis_fields(lambda);
    let st = Stepper { grid: g, ax, ay };
    let mut h = Mat2C::identity();
    match lp {
        LoopSpec::XPeriod { row } => {
            if !g.is_periodic() {
                return Err(Error::InvalidArgument("x-period loop needs a cylinder".into()));
            }
            if row >= g.ny {
                return Err(Error::InvalidArgument(format!("row {row} outside the grid")));
            }
            for a in 0..g.nx {
                h = renormalize(h * st.x_step(a as isize, row)).into_matrix();
            }
        }
        LoopSpec::Rectangle { i0, j0, i1, j1 } => {
            if i0 > i1 || j0 > j1 || i1 >= g.nx || j1 >= g.ny {
                return Err(Error::InvalidArgument("rectangle outside the grid".into()));
            }
            for a in i0..i1 {
                h *= st.x_step(a as isize, j0);
            }
            for a in j0..j1 {
                h *= st.y_step(i1, a as isize);
            }
            for a in (i0..i1).rev() {
                h *= SL2C::from_unchecked(st.x_step(a as isize, j1)).inverse().into_matrix();
            }
            for a in (j0..j1).rev() {
                h *= SL2C::from_unchecked(st.y_step(i0, a as isize)).inverse().into_matrix();
            }
        }
    }
    // `F(end) = F(start) · P` and `F(start) = id`; for the deck action `H = F(end) F(start)⁻¹`.
    Ok(renormalize(h))
}

/// `D^μ = diag(μ^{−1/2}, μ^{1/2})` with the principal branch.
pub fn gauge_d(mu: Complex64) -> Mat2C {
    let r = mu.sqrt();
    mat2(r.inv(), c(0.0, 0.0), c(0.0, 0.0), r)
}

/// `(D^μ)⁻¹ X D^μ`: the (1,2) entry gains `μ`, the (2,1) entry gains `μ⁻¹`.
/// Independent of the branch of `μ^{1/2}`.
pub fn untwist_matrix(x: &Mat2C, mu: Complex64) -> Mat2C {
    mat2(x[(0, 0)], x[(0, 1)] * mu, x[(1, 0)] / mu, x[(1, 1)])
}

/// Untwisted form `α̂`, a Laurent polynomial in `λ = μ²` with
/// `α̂^{μ²} = (D^μ)⁻¹ α^μ D^μ`: the dz (2,1) entry keeps `λ⁻¹`, the (1,2) entry moves to
/// `λ⁰`; the dz̄ (1,2) entry keeps `λ`, the (2,1) entry moves to `λ⁰`.
pub fn untwist_connection(conn: &ConnectionForm) -> ConnectionForm {
    let blocks = |x: &[Field<Mat2C>; 3]| -> [Field<Mat2C>; 3] {
        let (m, z, p) = (&x[0], &x[1], &x[2]);
        [
            m.map(lower),
            Field::from_fn(z.nx, z.ny, |i, j| z.get(i, j) + upper(m.get(i, j)) + lower(p.get(i, j))),
            p.map(upper),
        ]
    };
    ConnectionForm { grid: conn.grid, a: blocks(&conn.a), b: blocks(&conn.b) }
}

/// `F̂ = (D^μ)⁻¹ F D^μ`, the frame of `α̂` at `λ = μ²`.
#[derive(Debug, Clone)]
pub struct UntwistedFrame {
    pub lambda: Complex64,
    pub mu: Complex64,
    pub frame: ExtendedFrame,
}

pub fn untwist_frame(f: &ExtendedFrame) -> Result<UntwistedFrame> {
    let mu = f.lambda;
    if mu.norm() == 0.0 {
        return Err(Error::InvalidArgument("spectral value must be nonzero".into()));
    }
    let frames = f.frames.map(|m| SL2C::from_unchecked(untwist_matrix(m.matrix(), mu)));
    Ok(UntwistedFrame {
        lambda: mu * mu,
        mu,
        frame: ExtendedFrame { lambda: mu * mu, grid: f.grid, basepoint: f.basepoint, frames },
    })
}

/// Summary of one spectral value in a frame sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub lambda: [f64; 2],
    pub flatness: f64,
    pub det_error: f64,
    pub file: Option<String>,
}

/// Frames at several spectral values, integrated in parallel.
pub fn frame_sweep(
    conn: &ConnectionForm,
    lambdas: &[Complex64],
    basepoint: (usize, usize),
) -> Result<Vec<(ExtendedFrame, SweepEntry)>> {
    lambdas
        .par_iter()
        .map(|&l| {
            let flatness = flatness_residual(conn, l);
            let f = integrate_frame_with(conn, l, basepoint, FrameOptions { flatness_limit: None, ..Default::default() })?;
            if !(flatness < FLATNESS_LIMIT) {
                return Err(Error::FlatnessTooLarge { residual: flatness, limit: FLATNESS_LIMIT });
            }
            let entry = SweepEntry { lambda: [l.re, l.im], flatness, det_error: f.max_det_error(), file: None };
            Ok((f, entry))
        })
        .collect()
}
