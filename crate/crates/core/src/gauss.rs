//! Solutions `(u, Q)` of the structure equations
//! `∂̄∂u + (K/2)(e^u − |Q|²e^{−u}) = 0`, `∂̄Q = 0`, for `K = −1 + σ²`, `σ = tanh(s/2)`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diff::{Differ, MARGIN};
use crate::error::{Error, Result};
use crate::grid::{interior, DomainGrid, DomainKind, Field};
use crate::ode::Dopri5;

/// Relative margin in `e^{2u} − |Q|² > margin · e^{2u}`.
pub const NONDEGENERACY_MARGIN: f64 = 1e-6;

/// Residual target of the solvers.
pub const SOLVER_TOLERANCE: f64 = 1e-9;

/// Holomorphic polynomial `Σ c_k z^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPolynomial(pub Vec<Complex64>);

impl QPolynomial {
    pub fn constant(c: Complex64) -> Self {
        QPolynomial(vec![c])
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn sample(&self, grid: &DomainGrid) -> Field<Complex64> {
        Field::from_fn(grid.nx, grid.ny, |i, j| self.eval(grid.z(i, j)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricData {
    pub grid: DomainGrid,
    pub u: Field<f64>,
    pub q: Field<Complex64>,
    pub s: f64,
    nondegenerate: bool,
}

impl MetricData {
    pub fn new(grid: DomainGrid, u: Field<f64>, q: Field<Complex64>, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
        }
        let shape = (grid.nx, grid.ny);
        if (u.nx, u.ny) != shape || (q.nx, q.ny) != shape {
            return Err(Error::InvalidArgument("field shape does not match grid".into()));
        }
        let mut m = MetricData { grid, u, q, s, nondegenerate: false };
        m.nondegenerate = m.degenerate_nodes() == 0;
        Ok(m)
    }

    /// Parametrises by curvature `K ∈ (−1, 0)` instead of `s`.
    pub fn s_from_curvature(k: f64) -> Result<f64> {
        if !(k > -1.0 && k < 0.0) {
            return Err(Error::InvalidArgument(format!("K must lie in (-1, 0), got {k}")));
        }
        Ok(2.0 * (1.0 + k).sqrt().atanh())
    }

    pub fn sigma(&self) -> f64 {
        (0.5 * self.s).tanh()
    }

    pub fn curvature(&self) -> f64 {
        -1.0 + self.sigma().powi(2)
    }

    /// `√(−K)/2 = 1/(2cosh(s/2))`, the off-diagonal scale of the connection.
    pub fn kappa(&self) -> f64 {
        0.5 / (0.5 * self.s).cosh()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }

    pub fn is_node_nondegenerate(&self, i: usize, j: usize) -> bool {
        let e2u = (2.0 * self.u.get(i, j)).exp();
        e2u - self.q.get(i, j).norm_sqr() > NONDEGENERACY_MARGIN * e2u
    }

    pub fn degenerate_nodes(&self) -> usize {
        (0..self.grid.ny)
            .flat_map(|j| (0..self.grid.nx).map(move |i| (i, j)))
            .filter(|&(i, j)| !self.is_node_nondegenerate(i, j))
            .count()
    }

    /// Half-width of the band of boundary rows (and patch columns) where
    /// [`gauss_residual`] is not evaluated.
    pub fn residual_margin(&self) -> usize {
        match self.grid.kind {
            DomainKind::Cylinder => MARGIN,
            DomainKind::Patch => 1,
        }
    }

    /// Header object of the CSV dump.
    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.grid.kind,
            "nx": self.grid.nx,
            "ny": self.grid.ny,
            "Lx": self.grid.lx,
            "Ly": self.grid.ly,
            "s": self.s,
            "K": self.curvature(),
        })
    }

    /// Writes `i,j,x,y,u,ReQ,ImQ` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,x,y,u,ReQ,ImQ")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let q = self.q.get(i, j);
                writeln!(
                    w,
                    "{i},{j},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    self.grid.x(i),
                    self.grid.y(j),
                    self.u.get(i, j),
                    q.re,
                    q.im
                )?;
            }
        }
        Ok(())
    }
}

fn nonlinearity(k: f64, u: f64, q2: f64) -> f64 {
    0.5 * k * (u.exp() - q2 * (-u).exp())
}

/// Quarter of the 5-point Laplacian at an interior patch node.
fn quarter_laplacian5(f: &Field<f64>, i: usize, j: usize, hx: f64, hy: f64) -> f64 {
    let c = *f.get(i, j);
    let xx = (f.get(i + 1, j) + f.get(i - 1, j) - 2.0 * c) / (hx * hx);
    let yy = (f.get(i, j + 1) + f.get(i, j - 1) - 2.0 * c) / (hy * hy);
    0.25 * (xx + yy)
}

/// Pointwise residual of `∂̄∂u + (K/2)(e^u − |Q|²e^{−u})`.
///
/// Cylinders use the spectral second derivative in `x` and 9-point stencils in `y`;
/// patches use the 5-point Laplacian. Nodes within [`MetricData::residual_margin`] of a
/// non-periodic edge carry 0.
pub fn gauss_residual(m: &MetricData) -> Field<f64> {
    let k = m.curvature();
    let g = &m.grid;
    let margin = m.residual_margin();
    let mut out = Field::filled(g.nx, g.ny, 0.0);
    match g.kind {
        DomainKind::Cylinder => {
            let lap = Differ::new(g).d_zbar_z(&m.u.to_complex());
            for (i, j) in interior(g, margin) {
                *out.get_mut(i, j) = lap.get(i, j).re + nonlinearity(k, *m.u.get(i, j), m.q.get(i, j).norm_sqr());
            }
        }
        DomainKind::Patch => {
            let (hx, hy) = (g.hx(), g.hy());
            for (i, j) in interior(g, margin) {
                *out.get_mut(i, j) =
                    quarter_laplacian5(&m.u, i, j, hx, hy) + nonlinearity(k, *m.u.get(i, j), m.q.get(i, j).norm_sqr());
            }
        }
    }
    out
}

/// Solves the `y`-only reduction `u''/4 + (K/2)(e^u − |Q₀|²e^{−u}) = 0`, `u(0) = u0`,
/// `u'(0) = 0` on a cylinder grid, extending it constantly in `x`.
///
/// The profile is even in `y`, so only `y ≥ 0` is integrated.
pub fn solve_profile_ode(s: f64, q0: Complex64, u0: f64, grid: &DomainGrid) -> Result<MetricData> {
    if grid.kind != DomainKind::Cylinder {
        return Err(Error::InvalidArgument("profile data lives on a cylinder grid".into()));
    }
    let q2 = q0.norm_sqr();
    let e2u = (2.0 * u0).exp();
    if e2u - q2 <= NONDEGENERACY_MARGIN * e2u {
        return Err(Error::DegenerateProfile(format!(
            "u0 = {u0} does not exceed log|Q0| = {} by the nondegeneracy margin",
            0.5 * q2.ln()
        )));
    }
    if grid.ny < 4 {
        return Err(Error::DegenerateProfile("nondegeneracy band shorter than 4 rows".into()));
    }
    let probe = MetricData::new(*grid, Field::filled(grid.nx, grid.ny, u0), Field::filled(grid.nx, grid.ny, q0), s)?;
    let k = probe.curvature();
    let ny = grid.ny;
    // Nonnegative abscissae, ascending, with their mirror partners.
    let mut ys: Vec<(f64, usize)> = (0..ny).filter(|&j| grid.y(j) >= -1e-15).map(|j| (grid.y(j).max(0.0), j)).collect();
    ys.sort_by(|a, b| a.0.total_cmp(&b.0));
    let t_out: Vec<f64> = ys.iter().map(|&(y, _)| y).collect();
    let rhs = move |_: f64, y: &[f64], d: &mut [f64]| {
        d[0] = y[1];
        d[1] = -2.0 * k * (y[0].exp() - q2 * (-y[0]).exp());
    };
    let states = Dopri5::default().solve(rhs, 0.0, &[u0, 0.0], &t_out).map_err(|e| match e {
        Error::ProfileBlowUp(y) => Error::ProfileBlowUp(y),
        other => other,
    })?;
    let mut col = vec![0.0; ny];
    for (&(_, j), st) in ys.iter().zip(&states) {
        col[j] = st[0];
        col[ny - 1 - j] = st[0];
    }
    let u = Field::from_fn(grid.nx, ny, |_, j| col[j]);
    let q = Field::filled(grid.nx, ny, q0);
    let m = MetricData::new(*grid, u, q, s)?;
    if !m.is_nondegenerate() {
        return Err(Error::DegenerateProfile("profile leaves the nondegeneracy band".into()));
    }
    Ok(m)
}

/// First integral `u'²/8 + (K/2)(e^u + |Q|²e^{−u})` of the profile equation.
pub fn profile_first_integral(k: f64, q2: f64, u: f64, du: f64) -> f64 {
    du * du / 8.0 + 0.5 * k * (u.exp() + q2 * (-u).exp())
}

#[derive(Debug, Clone, Copy)]
pub struct PatchOptions {
    pub tolerance: f64,
    pub max_newton: usize,
    pub max_cg: usize,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions { tolerance: SOLVER_TOLERANCE, max_newton: 60, max_cg: 20_000 }
    }
}

/// Interior-node operator `v ↦ −¼L v − d·v` with zero Dirichlet data (SPD when `d ≤ 0`).
struct PatchOperator {
    nx: usize,
    ny: usize,
    cx: f64,
    cy: f64,
    d: Vec<f64>,
}

impl PatchOperator {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    out[j * nx + i] = 0.0;
                    continue;
                }
                let p = j * nx + i;
                let c = v[p];
                let xx = v[p + 1] + v[p - 1] - 2.0 * c;
                let yy = v[p + nx] + v[p - nx] - 2.0 * c;
                out[p] = -(self.cx * xx + self.cy * yy) - self.d[p] * c;
            }
        }
    }

    /// Conjugate gradients; boundary entries of `b` are ignored and of the result are 0.
    fn solve(&self, b: &[f64], max_iter: usize) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r: Vec<f64> = b.to_vec();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1 {
                    r[j * self.nx + i] = 0.0;
                }
            }
        }
        let b_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b_norm == 0.0 {
            return x;
        }
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = b_norm * b_norm;
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new = r.iter().map(|v| v * v).sum::<f64>();
            if rr_new.sqrt() <= 1e-14 * b_norm {
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
        }
        x
    }
}

/// Dirichlet problem on a patch: Newton iteration on the 5-point discretisation with the
/// exact Jacobian, backtracking on the residual norm, started from the harmonic extension
/// of the boundary values (only the edge entries of `boundary` are read).
///
/// A converged solution violating nondegeneracy is returned inside
/// [`Error::DegenerateSolution`].
pub fn solve_patch(
    qpoly: &QPolynomial,
    s: f64,
    grid: &DomainGrid,
    boundary: &Field<f64>,
    opts: PatchOptions,
) -> Result<MetricData> {
    if grid.kind != DomainKind::Patch {
        return Err(Error::InvalidArgument("patch solver needs a patch grid".into()));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    if (boundary.nx, boundary.ny) != (nx, ny) {
        return Err(Error::InvalidArgument("boundary field shape does not match grid".into()));
    }
    let q = qpoly.sample(grid);
    if q.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("Q is not finite on the patch".into()));
    }
    let q2: Vec<f64> = q.data.iter().map(|v| v.norm_sqr()).collect();
    let on_edge = |i: usize, j: usize| i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    let (hx, hy) = (grid.hx(), grid.hy());
    let (cx, cy) = (0.25 / (hx * hx), 0.25 / (hy * hy));

    // Harmonic extension: u = b + w, −¼L w = ¼L b on the interior.
    let mut b = Field::from_fn(nx, ny, |i, j| if on_edge(i, j) { *boundary.get(i, j) } else { 0.0 });
    let lap_op = PatchOperator { nx, ny, cx, cy, d: vec![0.0; nx * ny] };
    let mut rhs = vec![0.0; nx * ny];
    lap_op.apply(&b.data, &mut rhs);
    let rhs: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let w = lap_op.solve(&rhs, opts.max_cg);
    for (bv, wv) in b.data.iter_mut().zip(&w) {
        *bv += wv;
    }
    let mut m = MetricData::new(*grid, b, q, s)?;
    let k = m.curvature();

    let residual_vec = |u: &Field<f64>| -> Vec<f64> {
        let mut r = vec![0.0; nx * ny];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let p = j * nx + i;
                r[p] = quarter_laplacian5(u, i, j, hx, hy) + nonlinearity(k, u.data[p], q2[p]);
            }
        }
        r
    };
    let sup = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let l2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut r = residual_vec(&m.u);
    let mut iterations = 0;
    while sup(&r) >= opts.tolerance {
        if iterations == opts.max_newton {
            return Err(Error::NoConvergence { iterations, residual: sup(&r) });
        }
        iterations += 1;
        let d: Vec<f64> = m.u.data.iter().zip(&q2).map(|(&u, &q2)| 0.5 * k * (u.exp() + q2 * (-u).exp())).collect();
        let op = PatchOperator { nx, ny, cx, cy, d };
        // J δ = −R with J = −op.
        let delta = op.solve(&r, opts.max_cg);
        let base = l2(&r);
        let mut step = 1.0;
        loop {
            let trial = Field {
                nx,
                ny,
                data: m.u.data.iter().zip(&delta).map(|(u, d)| u + step * d).collect(),
            };
            let rt = residual_vec(&trial);
            if l2(&rt) < base || step < 1e-4 {
                m.u = trial;
                r = rt;
                break;
            }
            step *= 0.5;
        }
    }
    let m = MetricData::new(*grid, m.u, m.q, s)?;
    let bad = m.degenerate_nodes();
    if bad > 0 {
        return Err(Error::DegenerateSolution { nodes: bad, data: Box::new(m) });
    }
    Ok(m)
}

/// Sup-norm of `∂̄Q` using the grid's high-order derivatives.
pub fn klotz_residual(q: &Field<Complex64>, grid: &DomainGrid) -> f64 {
    Differ::new(grid).d_zbar(q).sup_norm()
}

/// Sup-norm of a residual field over nodes where it is evaluated.
pub fn residual_sup(m: &MetricData) -> f64 {
    gauss_residual(m).sup_norm()
}
