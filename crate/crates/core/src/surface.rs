//! Immersions `f = F F*`, normals `n = F e₁ F*`, their fundamental forms and curvatures,
//! Gauss maps, rigid-motion congruence and reconstruction from prescribed forms.
//!
//! A symmetric form `P dz² + E dz dz̄ + P̄ dz̄²` has real components
//! `xx = E + 2 Re P`, `yy = E − 2 Re P`, `xy = −2 Im P`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{
    basis, c, frame_of_unit_tangent, mat2, to_poincare_ball, CP1Point, GeodesicLine, H3Point, HermitianVec, Mat2C,
    UnitTangent, SL2C,
};
use crate::diff::Differ;
use crate::error::{Error, Result};
use crate::frame::ExtendedFrame;
use crate::gauss::MetricData;
use crate::grid::{DomainGrid, Field};
use crate::magnus::magnus_step;

/// Real 2×2 matrix in the `(∂ₓ, ∂ᵧ)` frame.
pub type Mat2R = Matrix2<f64>;

/// Coefficients `(P, E)` of `P dz² + E dz dz̄ + P̄ dz̄²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FormCoeffs {
    pub p: Complex64,
    pub e: f64,
}

impl FormCoeffs {
    pub fn from_real(xx: f64, xy: f64, yy: f64) -> Self {
        FormCoeffs { p: c(0.25 * (xx - yy), -0.5 * xy), e: 0.5 * (xx + yy) }
    }

    pub fn from_matrix(m: &Mat2R) -> Self {
        Self::from_real(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])
    }

    pub fn to_matrix(&self) -> Mat2R {
        let xy = -2.0 * self.p.im;
        Mat2R::new(self.e + 2.0 * self.p.re, xy, xy, self.e - 2.0 * self.p.re)
    }

    /// `max(|ΔP|, |ΔE|)`.
    pub fn distance(&self, other: &FormCoeffs) -> f64 {
        (self.p - other.p).norm().max((self.e - other.e).abs())
    }
}

/// Sampled surface in ℍ³ with its unit normal field.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub grid: DomainGrid,
    /// Spectral value of a spectral immersion; `None` for reconstructed surfaces.
    pub lambda0: Option<Complex64>,
    pub f: Field<H3Point>,
    pub n: Field<HermitianVec>,
}

impl SurfaceMesh {
    pub fn width(&self) -> usize {
        self.f.nx
    }

    /// Largest of `|det n + 1|` and `|⟨f, n⟩|` over the mesh.
    pub fn tangent_defect(&self) -> f64 {
        self.f
            .data
            .iter()
            .zip(&self.n.data)
            .map(|(f, n)| (n.det() + 1.0).abs().max(f.vec().dot(n).abs()))
            .fold(0.0, f64::max)
    }

    pub fn unit_tangents(&self) -> Result<Field<UnitTangent>> {
        let data = self
            .f
            .data
            .iter()
            .zip(&self.n.data)
            .map(|(f, n)| UnitTangent::new(*f, *n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Field { nx: self.f.nx, ny: self.f.ny, data })
    }

    /// Wavefront OBJ in the Poincaré ball: `v`, `vn` and triangulated `f` records.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        let (nx, ny) = (self.f.nx, self.f.ny);
        writeln!(w, "# {nx} x {ny} vertices, Poincare ball model")?;
        for p in &self.f.data {
            let [a, b, d] = to_poincare_ball(p);
            writeln!(w, "v {a:.12e} {b:.12e} {d:.12e}")?;
        }
        for (p, n) in self.f.data.iter().zip(&self.n.data) {
            let [a, b, d] = ball_normal(p.vec(), n);
            writeln!(w, "vn {a:.12e} {b:.12e} {d:.12e}")?;
        }
        let idx = |i: usize, j: usize| j * nx + i + 1;
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let (a, b, cc, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                writeln!(w, "f {a}//{a} {b}//{b} {cc}//{cc}")?;
                writeln!(w, "f {a}//{a} {cc}//{cc} {d}//{d}")?;
            }
        }
        Ok(())
    }
}

/// Image of the tangent vector `n` at `f` under the ball chart, normalised.
fn ball_normal(f: &HermitianVec, n: &HermitianVec) -> [f64; 3] {
    let d = 1.0 + f.0[0];
    let v = [1, 2, 3].map(|k| n.0[k] / d - f.0[k] * n.0[0] / (d * d));
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.map(|x| x / norm)
    } else {
        v
    }
}

fn check_spectral(lambda: Complex64) -> Result<()> {
    let r = lambda.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::SpectralOnCircle(lambda));
    }
    Ok(())
}

/// `f = F F*`, `n = F e₁ F*` for a frame at `λ₀` with `0 < |λ₀| < 1`.
pub fn spectral_immersion(frame: &ExtendedFrame) -> Result<SurfaceMesh> {
    check_spectral(frame.lambda)?;
    let e1 = HermitianVec::E1;
    let f = frame.frames.map(|g| H3Point::from_unchecked(HermitianVec::E0.act(g.matrix())));
    let n = frame.frames.map(|g| e1.act(g.matrix()));
    Ok(SurfaceMesh { grid: frame.grid, lambda0: Some(frame.lambda), f, n })
}

/// First, second and third fundamental forms on a grid; `valid` marks nodes where the
/// coefficients are defined.
#[derive(Debug, Clone)]
pub struct FundForms {
    pub first: Field<FormCoeffs>,
    pub second: Field<FormCoeffs>,
    pub third: Field<FormCoeffs>,
    pub valid: Field<bool>,
}

impl FundForms {
    pub fn nx(&self) -> usize {
        self.first.nx
    }

    pub fn ny(&self) -> usize {
        self.first.ny
    }

    /// Shape operator `I⁻¹ II` per node (identity where invalid).
    pub fn shape_operator(&self) -> Field<Mat2R> {
        let data = (0..self.first.data.len())
            .map(|p| {
                if !self.valid.data[p] {
                    return Mat2R::identity();
                }
                let i = self.first.data[p].to_matrix();
                i.try_inverse().map_or(Mat2R::identity(), |inv| inv * self.second.data[p].to_matrix())
            })
            .collect();
        Field { nx: self.nx(), ny: self.ny(), data }
    }

    /// `K = −1 + det(I⁻¹ II)`.
    pub fn gaussian_curvature(&self) -> Field<f64> {
        self.shape_operator().map(|b| -1.0 + b.determinant())
    }

    /// `H = tr(I⁻¹ II)/4`, the normalisation in which `H = (σ/2)(e^{2u} + |Q|²)/(e^{2u} − |Q|²)`.
    pub fn mean_curvature(&self) -> Field<f64> {
        self.shape_operator().map(|b| 0.25 * b.trace())
    }
}

/// Fundamental forms by second-order centered differences of `f` and `n`, defined on
/// nodes one step inside the mesh.
pub fn numeric_forms(mesh: &SurfaceMesh) -> Result<FundForms> {
    let (nx, ny) = (mesh.f.nx, mesh.f.ny);
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidArgument("mesh needs at least 3 nodes per direction".into()));
    }
    let (hx, hy) = (mesh.grid.hx(), mesh.grid.hy());
    let rows: Vec<Vec<(FormCoeffs, FormCoeffs, FormCoeffs, bool)>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| {
                    if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                        return Default::default();
                    }
                    let dx = |fl: &dyn Fn(usize, usize) -> HermitianVec| fl(i + 1, j).sub(&fl(i - 1, j)).scale(0.5 / hx);
                    let dy = |fl: &dyn Fn(usize, usize) -> HermitianVec| fl(i, j + 1).sub(&fl(i, j - 1)).scale(0.5 / hy);
                    let fv = |a: usize, b: usize| *mesh.f.get(a, b).vec();
                    let nv = |a: usize, b: usize| *mesh.n.get(a, b);
                    let (fx, fy, nxv, nyv) = (dx(&fv), dy(&fv), dx(&nv), dy(&nv));
                    let first = FormCoeffs::from_real(fx.dot(&fx), fx.dot(&fy), fy.dot(&fy));
                    let second = FormCoeffs::from_real(fx.dot(&nxv), 0.5 * (fx.dot(&nyv) + fy.dot(&nxv)), fy.dot(&nyv));
                    let third = FormCoeffs::from_real(nxv.dot(&nxv), nxv.dot(&nyv), nyv.dot(&nyv));
                    (first, second, third, true)
                })
                .collect()
        })
        .collect();
    let flat: Vec<_> = rows.into_iter().flatten().collect();
    Ok(FundForms {
        first: Field { nx, ny, data: flat.iter().map(|t| t.0).collect() },
        second: Field { nx, ny, data: flat.iter().map(|t| t.1).collect() },
        third: Field { nx, ny, data: flat.iter().map(|t| t.2).collect() },
        valid: Field { nx, ny, data: flat.iter().map(|t| t.3).collect() },
    })
}

/// Closed-form fundamental forms of the spectral immersion at `λ₀ = r e^{iφ}`, together
/// with the mean curvature and the Klotz coefficient of the family member.
#[derive(Debug, Clone)]
pub struct AnalyticForms {
    pub forms: FundForms,
    /// `(σ/2)(e^{2u} + |Q|²)/(e^{2u} − |Q|²)` with `σ = (1 − r²)/(1 + r²)`.
    pub mean_curvature: Field<f64>,
    /// `e^{−2iφ} Q`, the dz² coefficient of `I` up to its positive scale.
    pub klotz: Field<Complex64>,
    /// `σ = tanh(s_λ/2)` of the immersion.
    pub sigma: f64,
    /// `K = −1 + σ²`.
    pub curvature: f64,
}

/// Scales `(|λ⁻¹ + λ̄|κ, |λ⁻¹ − λ̄|κ)` of the immersion at `λ₀`.
pub fn spectral_scales(m: &MetricData, lambda0: Complex64) -> (f64, f64) {
    let r = lambda0.norm();
    let kappa = m.kappa();
    ((1.0 + r * r) / r * kappa, (1.0 - r * r) / r * kappa)
}

pub fn analytic_forms(m: &MetricData, lambda0: Complex64) -> Result<AnalyticForms> {
    check_spectral(lambda0)?;
    if !m.is_nondegenerate() {
        return Err(Error::DegenerateData(format!("{} degenerate node(s)", m.degenerate_nodes())));
    }
    let (a, b) = spectral_scales(m, lambda0);
    let phase = Complex64::from_polar(1.0, -2.0 * lambda0.arg());
    let r2 = lambda0.norm_sqr();
    let sigma = (1.0 - r2) / (1.0 + r2);
    let (nx, ny) = (m.grid.nx, m.grid.ny);
    let mut first = Vec::with_capacity(nx * ny);
    let mut second = Vec::with_capacity(nx * ny);
    let mut third = Vec::with_capacity(nx * ny);
    let mut h = Vec::with_capacity(nx * ny);
    for (u, q) in m.u.data.iter().zip(&m.q.data) {
        let (ep, em) = (u.exp(), (-u).exp());
        let sum = ep + q.norm_sqr() * em;
        let diff = ep - q.norm_sqr() * em;
        let pq = phase * q;
        first.push(FormCoeffs { p: pq * (a * a), e: a * a * sum });
        second.push(FormCoeffs { p: c(0.0, 0.0), e: a * b * diff });
        third.push(FormCoeffs { p: -pq * (b * b), e: b * b * sum });
        h.push(0.5 * sigma * sum / diff);
    }
    Ok(AnalyticForms {
        forms: FundForms {
            first: Field { nx, ny, data: first },
            second: Field { nx, ny, data: second },
            third: Field { nx, ny, data: third },
            valid: Field::filled(nx, ny, true),
        },
        mean_curvature: Field { nx, ny, data: h },
        klotz: m.q.map(|q| phase * q),
        sigma,
        curvature: -1.0 + sigma * sigma,
    })
}

/// Curvature `−(2r/(1 + r²))²` of the spectral immersion at `|λ₀| = r`.
pub fn spectral_curvature(lambda0: Complex64) -> f64 {
    let r = lambda0.norm();
    -(2.0 * r / (1.0 + r * r)).powi(2)
}

/// Legendrian map `(f, n)` and Lagrangian map (geodesic through `f` tangent to `n`) of a
/// frame; the endpoints are the projectivised columns of `F`.
pub fn gauss_maps(frame: &ExtendedFrame) -> Result<(Field<UnitTangent>, Field<GeodesicLine>)> {
    let mesh = spectral_immersion(frame)?;
    let legendrian = Field {
        nx: mesh.f.nx,
        ny: mesh.f.ny,
        data: mesh.f.data.iter().zip(&mesh.n.data).map(|(f, n)| UnitTangent { x: *f, v: *n }).collect(),
    };
    let data = frame
        .frames
        .data
        .iter()
        .map(|g| {
            let m = g.matrix();
            GeodesicLine::new(CP1Point::new(m[(0, 0)], m[(1, 0)])?, CP1Point::new(m[(0, 1)], m[(1, 1)])?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((legendrian, Field { nx: frame.frames.nx, ny: frame.frames.ny, data }))
}

/// Real basis of `sl(2, ℂ)`.
fn sl2_generators() -> [Mat2C; 6] {
    let [_, e1, e2, e3] = basis();
    let i = c(0.0, 1.0);
    let half = c(0.5, 0.0);
    [e1 * half, e2 * half, e3 * half, e1 * (i * half), e2 * (i * half), e3 * (i * half)]
}

fn motion_cost(g: &Mat2C, f1: &[HermitianVec], f2: &[HermitianVec]) -> f64 {
    f1.iter().zip(f2).map(|(a, b)| a.act(g).sub(b).0.iter().map(|v| v * v).sum::<f64>()).sum()
}

/// Best-fit motion `g` with `g f₁ g* ≈ f₂`, and the RMS hyperbolic distance after it.
///
/// Seeded by aligning the unit tangents at node `(0, 0)` over a scan of the residual
/// rotation, refined by Levenberg–Marquardt on the coordinate differences.
pub fn congruence_check(mesh1: &SurfaceMesh, mesh2: &SurfaceMesh) -> Result<(SL2C, f64)> {
    if (mesh1.f.nx, mesh1.f.ny) != (mesh2.f.nx, mesh2.f.ny) {
        return Err(Error::InvalidArgument("meshes have different shapes".into()));
    }
    let f1: Vec<HermitianVec> = mesh1.f.data.iter().map(|p| *p.vec()).collect();
    let f2: Vec<HermitianVec> = mesh2.f.data.iter().map(|p| *p.vec()).collect();
    let t1 = UnitTangent::new(*mesh1.f.get(0, 0), *mesh1.n.get(0, 0))?;
    let t2 = UnitTangent::new(*mesh2.f.get(0, 0), *mesh2.n.get(0, 0))?;
    let g1 = frame_of_unit_tangent(&t1)?;
    let g2 = frame_of_unit_tangent(&t2)?;
    let mut best = (f64::INFINITY, Mat2C::identity());
    for k in 0..72 {
        let t = std::f64::consts::PI * k as f64 / 72.0;
        let r = mat2(Complex64::from_polar(1.0, t), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, -t));
        let g = g2.matrix() * r * g1.inverse().matrix();
        let cost = motion_cost(&g, &f1, &f2);
        if cost < best.0 {
            best = (cost, g);
        }
    }
    let gens = sl2_generators();
    let (mut cost, mut g) = best;
    let mut damping = 1e-3;
    for _ in 0..100 {
        let n = f1.len();
        let mut jac = DMatrix::<f64>::zeros(4 * n, 6);
        let mut res = DVector::<f64>::zeros(4 * n);
        for (p, (a, b)) in f1.iter().zip(&f2).enumerate() {
            let y = a.act(&g);
            let ym = y.to_matrix();
            for k in 0..4 {
                res[4 * p + k] = y.0[k] - b.0[k];
            }
            for (col, x) in gens.iter().enumerate() {
                let d = HermitianVec::from_matrix(&(x * ym + ym * x.adjoint()));
                for k in 0..4 {
                    jac[(4 * p + k, col)] = d.0[k];
                }
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * &res;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for d in 0..6 {
                a[(d, d)] += damping * (1.0 + jtj[(d, d)]);
            }
            let Some(delta) = a.lu().solve(&(-&grad)) else { break };
            let step = gens.iter().zip(delta.iter()).fold(Mat2C::zeros(), |acc, (x, &t)| acc + x * c(t, 0.0));
            let trial = crate::algebra::exp_mat2(&step) * g;
            let tc = motion_cost(&trial, &f1, &f2);
            if tc < cost {
                g = trial;
                let rel = (cost - tc) / cost.max(1e-300);
                cost = tc;
                damping = (damping * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let g = SL2C::normalize(g)?;
    let sq: f64 = mesh1
        .f
        .data
        .iter()
        .zip(&mesh2.f.data)
        .map(|(a, b)| H3Point::from_unchecked(a.vec().act(g.matrix())).distance(b).powi(2))
        .sum();
    Ok((g, (sq / f1.len() as f64).sqrt()))
}

/// Form mismatch summary for one spectral immersion.
#[derive(Debug, Clone, Serialize)]
pub struct FormReport {
    #[serde(rename = "max_err_I")]
    pub max_err_i: f64,
    #[serde(rename = "max_err_II")]
    pub max_err_ii: f64,
    #[serde(rename = "max_err_III")]
    pub max_err_iii: f64,
    #[serde(rename = "K_numeric")]
    pub k_numeric: f64,
    #[serde(rename = "K_formula")]
    pub k_formula: f64,
    #[serde(rename = "H_max_err")]
    pub h_max_err: f64,
}

/// Compares numeric against analytic forms on valid, nondegenerate nodes at least
/// `margin` nodes inside the mesh. `K_numeric` is the node value farthest from the formula.
pub fn compare_forms(numeric: &FundForms, analytic: &AnalyticForms, m: &MetricData, margin: usize) -> FormReport {
    let (nx, ny) = (numeric.nx().min(m.grid.nx), numeric.ny());
    let k_num = numeric.gaussian_curvature();
    let h_num = numeric.mean_curvature();
    let mut rep = FormReport {
        max_err_i: 0.0,
        max_err_ii: 0.0,
        max_err_iii: 0.0,
        k_numeric: analytic.curvature,
        k_formula: analytic.curvature,
        h_max_err: 0.0,
    };
    let mut worst_k = -1.0;
    for j in margin.max(1)..ny - margin.max(1) {
        for i in margin.max(1)..nx - margin.max(1) {
            if !numeric.valid.get(i, j) || !m.is_node_nondegenerate(i, j) {
                continue;
            }
            let a = &analytic.forms;
            rep.max_err_i = rep.max_err_i.max(numeric.first.get(i, j).distance(a.first.get(i, j)));
            rep.max_err_ii = rep.max_err_ii.max(numeric.second.get(i, j).distance(a.second.get(i, j)));
            rep.max_err_iii = rep.max_err_iii.max(numeric.third.get(i, j).distance(a.third.get(i, j)));
            rep.h_max_err = rep.h_max_err.max((h_num.get(i, j) - analytic.mean_curvature.get(i, j)).abs());
            let dk = (k_num.get(i, j) - analytic.curvature).abs();
            if dk > worst_k {
                worst_k = dk;
                rep.k_numeric = *k_num.get(i, j);
            }
        }
    }
    rep
}

/// Christoffel symbols `Γ^m_kj` (index `[m][k][j]`) of a metric field, using the grid's
/// high-order derivatives.
pub fn christoffel(grid: &DomainGrid, metric: &Field<Mat2R>) -> Field<[[[f64; 2]; 2]; 2]> {
    let d = Differ::new(grid);
    let comp = |a: usize, b: usize| metric.map(|g| c(g[(a, b)], 0.0));
    let parts = [(0, 0), (0, 1), (1, 1)];
    let dxs: Vec<Field<Complex64>> = parts.iter().map(|&(a, b)| d.dx(&comp(a, b))).collect();
    let dys: Vec<Field<Complex64>> = parts.iter().map(|&(a, b)| d.dy(&comp(a, b))).collect();
    let slot = |a: usize, b: usize| match (a.min(b), a.max(b)) {
        (0, 0) => 0,
        (0, 1) => 1,
        _ => 2,
    };
    Field::from_fn(metric.nx, metric.ny, |i, j| {
        // dg[l][a][b] = ∂_l g_ab
        let mut dg = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                dg[0][a][b] = dxs[slot(a, b)].get(i, j).re;
                dg[1][a][b] = dys[slot(a, b)].get(i, j).re;
            }
        }
        let inv = metric.get(i, j).try_inverse().unwrap_or_else(Mat2R::identity);
        let mut gam = [[[0.0; 2]; 2]; 2];
        for m in 0..2 {
            for k in 0..2 {
                for jj in 0..2 {
                    gam[m][k][jj] = (0..2)
                        .map(|l| 0.5 * inv[(m, l)] * (dg[k][l][jj] + dg[jj][l][k] - dg[l][k][jj]))
                        .sum();
                }
            }
        }
        gam
    })
}

/// Rebuilds a surface in ℍ³ from its first fundamental form and shape operator by
/// integrating the Gauss–Weingarten system for `Φ = [f, fₓ, fᵧ, n]`.
///
/// At the basepoint `f = e₀`, `n = e₁`, `fₓ ∥ e₃` and `(f, fₓ, fᵧ, n)` negatively
/// oriented. On cylinders `extra_columns` extends the surface onto the next sheet.
pub fn reconstruct_from_forms(
    grid: &DomainGrid,
    first: &Field<Mat2R>,
    shape: &Field<Mat2R>,
    basepoint: (usize, usize),
    extra_columns: usize,
) -> Result<SurfaceMesh> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (i0, j0) = basepoint;
    if i0 >= nx || j0 >= ny {
        return Err(Error::InvalidArgument("basepoint outside the grid".into()));
    }
    let gam = christoffel(grid, first);
    let omega = |k: usize, i: usize, j: usize| -> Matrix4<f64> {
        let g = first.get(i, j);
        let b = shape.get(i, j);
        let two = g * b;
        let gm = gam.get(i, j);
        let mut o = Matrix4::zeros();
        o[(1 + k, 0)] = 1.0;
        for jj in 0..2 {
            o[(0, 1 + jj)] = g[(k, jj)];
            for m in 0..2 {
                o[(1 + m, 1 + jj)] = gm[m][k][jj];
            }
            o[(3, 1 + jj)] = -0.5 * (two[(k, jj)] + two[(jj, k)]);
        }
        for m in 0..2 {
            o[(1 + m, 3)] = b[(m, k)];
        }
        o
    };
    let g0 = first.get(i0, j0);
    let (gxx, gxy, gyy) = (g0[(0, 0)], g0[(0, 1)], g0[(1, 1)]);
    if !(gxx > 0.0 && gxx * gyy - gxy * gxy > 0.0) {
        return Err(Error::DegenerateForms("first form not positive definite at basepoint".into()));
    }
    let sx = gxx.sqrt();
    let mut phi0 = Matrix4::zeros();
    phi0[(0, 0)] = 1.0;
    phi0[(3, 1)] = sx;
    phi0[(2, 2)] = (gxx * gyy - gxy * gxy).sqrt() / sx;
    phi0[(3, 2)] = gxy / sx;
    phi0[(1, 3)] = 1.0;

    let width = nx + if grid.is_periodic() { extra_columns } else { 0 };
    let mut phi = Field::filled(width, ny, Matrix4::<f64>::zeros());
    *phi.get_mut(i0, j0) = phi0;
    let ystep = |i: usize, a: isize| magnus_step(|k| omega(1, i, k as usize), a, ny, false, grid.hy());
    let xstep = |a: isize, j: usize| {
        let n = nx as isize;
        let sample = |k: isize| {
            let kk = if grid.is_periodic() { k.rem_euclid(n) } else { k };
            omega(0, kk as usize, j)
        };
        magnus_step(sample, a, nx, grid.is_periodic(), grid.hx())
    };
    for j in j0 + 1..ny {
        *phi.get_mut(i0, j) = phi.get(i0, j - 1) * ystep(i0, j as isize - 1);
    }
    for j in (0..j0).rev() {
        let inv = ystep(i0, j as isize).try_inverse().ok_or_else(|| Error::DegenerateForms("singular step".into()))?;
        *phi.get_mut(i0, j) = phi.get(i0, j + 1) * inv;
    }
    let rows: Vec<Vec<Matrix4<f64>>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![Matrix4::zeros(); width];
            row[i0] = *phi.get(i0, j);
            for i in i0 + 1..width {
                row[i] = row[i - 1] * xstep(i as isize - 1, j);
            }
            for i in (0..i0).rev() {
                let inv = xstep(i as isize, j).try_inverse().unwrap_or_else(Matrix4::identity);
                row[i] = row[i + 1] * inv;
            }
            row
        })
        .collect();
    let mut f = Vec::with_capacity(width * ny);
    let mut n = Vec::with_capacity(width * ny);
    for row in rows {
        for m in row {
            let (fp, np) = project_tangent(
                HermitianVec([m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(3, 0)]]),
                HermitianVec([m[(0, 3)], m[(1, 3)], m[(2, 3)], m[(3, 3)]]),
            );
            f.push(fp);
            n.push(np);
        }
    }
    Ok(SurfaceMesh { grid: *grid, lambda0: None, f: Field { nx: width, ny, data: f }, n: Field { nx: width, ny, data: n } })
}

/// Nearest unit tangent: `f` rescaled onto the hyperboloid, `n` made orthogonal and unit.
fn project_tangent(f: HermitianVec, n: HermitianVec) -> (H3Point, HermitianVec) {
    let f = f.scale(1.0 / (-f.dot(&f)).sqrt());
    let n = n.add(&f.scale(n.dot(&f)));
    let n = n.scale(1.0 / n.dot(&n).sqrt());
    (H3Point::from_unchecked(f), n)
}
