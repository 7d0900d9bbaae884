//! Discrete derivatives on [`DomainGrid`] fields.
//!
//! The periodic direction of a cylinder is differentiated spectrally; every other
//! direction uses 9-point finite-difference stencils (eighth order in the interior,
//! shifted one-sided stencils on the boundary rows). The one-sided stencils lose several
//! digits to rounding, so residual checks use only [`MARGIN`]-interior nodes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{DomainGrid, Field};

pub const STENCIL_WIDTH: usize = 9;

/// Half-width of the centered stencil.
pub const MARGIN: usize = STENCIL_WIDTH / 2;

/// Finite-difference weights for the `order`-th derivative at `x0` on arbitrary `nodes`
/// (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

#[derive(Clone)]
enum AxisOp {
    Spectral { fwd: Arc<dyn Fft<f64>>, inv: Arc<dyn Fft<f64>>, wavenumbers: Vec<f64> },
    /// Per position: first node of the stencil and the weights for orders 1 and 2.
    Stencil { starts: Vec<usize>, w1: Vec<Vec<f64>>, w2: Vec<Vec<f64>> },
}

impl AxisOp {
    fn spectral(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let wavenumbers = (0..n)
            .map(|k| {
                let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                2.0 * std::f64::consts::PI * k / length
            })
            .collect();
        AxisOp::Spectral { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), wavenumbers }
    }

    fn stencil(n: usize, h: f64) -> Self {
        let width = STENCIL_WIDTH.min(n);
        let mut starts = Vec::with_capacity(n);
        let mut w1 = Vec::with_capacity(n);
        let mut w2 = Vec::with_capacity(n);
        for p in 0..n {
            let start = p.saturating_sub(width / 2).min(n - width);
            let nodes: Vec<f64> = (start..start + width).map(|q| q as f64 * h).collect();
            let x0 = p as f64 * h;
            starts.push(start);
            w1.push(fornberg_weights(x0, &nodes, 1));
            w2.push(fornberg_weights(x0, &nodes, 2));
        }
        AxisOp::Stencil { starts, w1, w2 }
    }

    /// Differentiates one line in place; `order` is 1 or 2.
    fn apply(&self, line: &mut [Complex64], order: usize, scratch: &mut Vec<Complex64>) {
        match self {
            AxisOp::Spectral { fwd, inv, wavenumbers } => {
                let n = line.len();
                fwd.process(line);
                for (k, v) in line.iter_mut().enumerate() {
                    let kk = wavenumbers[k];
                    let nyquist = n.is_multiple_of(2) && k == n / 2;
                    *v = match order {
                        1 if nyquist => Complex64::new(0.0, 0.0),
                        1 => *v * Complex64::new(0.0, kk),
                        _ => *v * (-kk * kk),
                    } / n as f64;
                }
                inv.process(line);
            }
            AxisOp::Stencil { starts, w1, w2 } => {
                scratch.clear();
                scratch.extend_from_slice(line);
                let w = if order == 1 { w1 } else { w2 };
                for (p, out) in line.iter_mut().enumerate() {
                    let s = starts[p];
                    *out = w[p].iter().enumerate().map(|(q, &c)| scratch[s + q] * c).sum();
                }
            }
        }
    }
}

/// Derivative operators bound to one grid.
#[derive(Clone)]
pub struct Differ {
    grid: DomainGrid,
    x: AxisOp,
    y: AxisOp,
}

impl Differ {
    pub fn new(grid: &DomainGrid) -> Self {
        let x = if grid.is_periodic() {
            AxisOp::spectral(grid.nx, grid.lx)
        } else {
            AxisOp::stencil(grid.nx, grid.hx())
        };
        Differ { grid: *grid, x, y: AxisOp::stencil(grid.ny, grid.hy()) }
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    fn along_x(&self, f: &Field<Complex64>, order: usize) -> Field<Complex64> {
        let mut out = f.clone();
        let mut scratch = Vec::new();
        for row in out.data.chunks_mut(f.nx) {
            self.x.apply(row, order, &mut scratch);
        }
        out
    }

    fn along_y(&self, f: &Field<Complex64>, order: usize) -> Field<Complex64> {
        let mut out = f.clone();
        let mut col = vec![Complex64::new(0.0, 0.0); f.ny];
        let mut scratch = Vec::new();
        for i in 0..f.nx {
            for (j, v) in col.iter_mut().enumerate() {
                *v = *f.get(i, j);
            }
            self.y.apply(&mut col, order, &mut scratch);
            for (j, v) in col.iter().enumerate() {
                *out.get_mut(i, j) = *v;
            }
        }
        out
    }

    pub fn dx(&self, f: &Field<Complex64>) -> Field<Complex64> {
        self.along_x(f, 1)
    }

    pub fn dy(&self, f: &Field<Complex64>) -> Field<Complex64> {
        self.along_y(f, 1)
    }

    pub fn dxx(&self, f: &Field<Complex64>) -> Field<Complex64> {
        self.along_x(f, 2)
    }

    pub fn dyy(&self, f: &Field<Complex64>) -> Field<Complex64> {
        self.along_y(f, 2)
    }

    /// `∂ = ½(∂ₓ − i∂ᵧ)`.
    pub fn d_z(&self, f: &Field<Complex64>) -> Field<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        self.dx(f).zip_map(&self.dy(f), |a, b| (a - i * b) * 0.5)
    }

    /// `∂̄ = ½(∂ₓ + i∂ᵧ)`.
    pub fn d_zbar(&self, f: &Field<Complex64>) -> Field<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        self.dx(f).zip_map(&self.dy(f), |a, b| (a + i * b) * 0.5)
    }

    /// `∂̄∂ = ¼Δ`.
    pub fn d_zbar_z(&self, f: &Field<Complex64>) -> Field<Complex64> {
        self.dxx(f).zip_map(&self.dyy(f), |a, b| (a + b) * 0.25)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_centered_three_point() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert_eq!(w, vec![-0.5, 0.0, 0.5]);
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn stencils_exact_on_polynomials() {
        let g = DomainGrid::patch(12, 10, -0.3, 0.2, 1.1, 0.9).unwrap();
        let d = Differ::new(&g);
        let f = Field::from_fn(g.nx, g.ny, |i, j| {
            let (x, y) = (g.x(i), g.y(j));
            Complex64::new(x.powi(7) - 2.0 * y.powi(6) * x, x * y.powi(3))
        });
        let fx = d.dx(&f);
        let fyy = d.dyy(&f);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                let want_x = Complex64::new(7.0 * x.powi(6) - 2.0 * y.powi(6), y.powi(3));
                let want_yy = Complex64::new(-60.0 * y.powi(4) * x, 6.0 * x * y);
                assert!((fx.get(i, j) - want_x).norm() < 1e-9, "{i} {j}");
                assert!((fyy.get(i, j) - want_yy).norm() < 1e-7, "{i} {j}");
            }
        }
    }

    #[test]
    fn spectral_in_periodic_direction() {
        let g = DomainGrid::cylinder(32, 9, 2.0, 1.0).unwrap();
        let d = Differ::new(&g);
        let k = std::f64::consts::PI;
        let f = Field::from_fn(g.nx, g.ny, |i, _| Complex64::new((2.0 * k * g.x(i)).sin(), (k * g.x(i)).cos()));
        let fx = d.dx(&f);
        let fxx = d.dxx(&f);
        for i in 0..g.nx {
            let x = g.x(i);
            let want = Complex64::new(2.0 * k * (2.0 * k * x).cos(), -k * (k * x).sin());
            let want2 = Complex64::new(-4.0 * k * k * (2.0 * k * x).sin(), -k * k * (k * x).cos());
            assert!((fx.get(i, 3) - want).norm() < 1e-12);
            assert!((fxx.get(i, 3) - want2).norm() < 1e-11);
        }
    }
}
