//! Hyperbolic metric pairs `(h, h*)` and Labourie operators `b` of constant-curvature
//! surfaces, the complex structure `J`, the rotation field `β_θ` and the landslide action.
//!
//! Everything is stored in the real `(∂ₓ, ∂ᵧ)` frame. In the conformal coordinate of the
//! second fundamental form `J b` is the standard rotation `R = [[0, −1], [1, 0]]`, so
//! `β_θ` acts on `∂_z` by the phase `e^{iθ/2}` (see [`BETA_PHASE_SIGN`]).

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::c;
use crate::diff::Differ;
use crate::error::{Error, Result};
use crate::gauss::MetricData;
use crate::grid::{DomainGrid, Field};
use crate::surface::{analytic_forms, christoffel, FormCoeffs, FundForms, Mat2R};

/// Symmetric positive-definite 2×2 field.
pub type MetricField = Field<Mat2R>;

/// Field of endomorphisms of the tangent plane.
pub type OperatorField = Field<Mat2R>;

/// `β_θ ∂_z = e^{i·BETA_PHASE_SIGN·θ/2} ∂_z`.
pub const BETA_PHASE_SIGN: f64 = 1.0;

/// The landslide by `θ` corresponds to the family member at spectral phase
/// `arg λ₀ = LANDSLIDE_PHASE_SIGN · θ/2`.
pub const LANDSLIDE_PHASE_SIGN: f64 = -1.0;

/// Positive-definiteness threshold on eigenvalues.
pub const MIN_EIGENVALUE: f64 = 1e-10;

fn rotation90() -> Mat2R {
    Mat2R::new(0.0, -1.0, 1.0, 0.0)
}

fn is_positive(m: &Mat2R) -> bool {
    let tr = m.trace();
    let det = m.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (m[(0, 1)] - m[(1, 0)]).abs() <= 1e-12 * m.norm().max(1.0) && 0.5 * tr - disc > MIN_EIGENVALUE
}

/// `h = I/cosh²(s/2)`, `h* = III/sinh²(s/2)`. Nodes where the forms are not defined carry
/// the identity.
pub fn metrics_from_forms(forms: &FundForms, s: f64) -> Result<(MetricField, MetricField)> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    let ch2 = (0.5 * s).cosh().powi(2);
    let sh2 = (0.5 * s).sinh().powi(2);
    let convert = |f: &Field<FormCoeffs>, scale: f64| -> Result<MetricField> {
        let data = f
            .data
            .iter()
            .zip(&forms.valid.data)
            .map(|(k, &ok)| {
                if !ok {
                    return Ok(Mat2R::identity());
                }
                let m = k.to_matrix() / scale;
                if is_positive(&m) {
                    Ok(m)
                } else {
                    Err(Error::DegenerateForms("form is not positive definite".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Field { nx: f.nx, ny: f.ny, data })
    };
    Ok((convert(&forms.first, ch2)?, convert(&forms.third, sh2)?))
}

/// `b = coth(s/2) B`: the positive Labourie operator of a surface of curvature
/// `−1/cosh²(s/2)` with positive shape operator `B`.
pub fn labourie_operator(shape: &OperatorField, s: f64) -> OperatorField {
    let coth = 1.0 / (0.5 * s).tanh();
    shape.map(|b| b * coth)
}

/// `J = coth(s/2) B R`, the real form of `J∂_z = i coth(s/2) B∂_z`.
pub fn complex_structure(shape: &OperatorField, s: f64) -> OperatorField {
    let coth = 1.0 / (0.5 * s).tanh();
    shape.map(|b| b * rotation90() * coth)
}

/// Positively oriented rotation by a quarter turn for the metric `g`.
pub fn metric_complex_structure(g: &Mat2R) -> Mat2R {
    let det = g.determinant().sqrt();
    Mat2R::new(-g[(0, 1)], -g[(1, 1)], g[(0, 0)], g[(1, 0)]) / det
}

/// `β_θ = cos(θ/2) E + sin(θ/2) J b`.
pub fn beta_theta(j: &OperatorField, b: &OperatorField, theta: f64) -> OperatorField {
    let (sn, cs) = (0.5 * theta).sin_cos();
    j.zip_map(b, |j, b| Mat2R::identity() * cs + j * b * sn)
}

/// Real 2×2 operator applied to the complex vector `∂_z = (1, −i)/2`.
fn act_on_dz(m: &Mat2R, v: [Complex64; 2]) -> [Complex64; 2] {
    [v[0] * m[(0, 0)] + v[1] * m[(0, 1)], v[0] * m[(1, 0)] + v[1] * m[(1, 1)]]
}

fn dz() -> [Complex64; 2] {
    [c(0.5, 0.0), c(0.0, -0.5)]
}

fn dzbar() -> [Complex64; 2] {
    [c(0.5, 0.0), c(0.0, 0.5)]
}

/// Sup over nodes of `|β_θ ∂_z − e^{i·BETA_PHASE_SIGN·θ/2} ∂_z|`.
pub fn beta_eigen_residual(beta: &OperatorField, theta: f64) -> f64 {
    let phase = Complex64::from_polar(1.0, BETA_PHASE_SIGN * 0.5 * theta);
    let v = dz();
    beta.data
        .iter()
        .map(|m| {
            let w = act_on_dz(m, v);
            (w[0] - phase * v[0]).norm().max((w[1] - phase * v[1]).norm())
        })
        .fold(0.0, f64::max)
}

/// `J` assembled from `J∂_z = (2iH/tanh(s/2))∂_z − (2iQ/(e^u − |Q|²e^{−u}))∂_z̄` with
/// `Q` the Klotz coefficient of the surface.
pub fn explicit_complex_structure(h_mean: f64, klotz: Complex64, u: f64, s: f64) -> Mat2R {
    let i = c(0.0, 1.0);
    let d = u.exp() - klotz.norm_sqr() * (-u).exp();
    let a = i * 2.0 * h_mean / (0.5 * s).tanh();
    let b = -i * 2.0 * klotz / d;
    let (v, w) = (dz(), dzbar());
    // J(1, −i) = 2(a ∂_z + b ∂_z̄); columns of J are J e_x = Re, J e_y = −Im of that image.
    let img = [(a * v[0] + b * w[0]) * 2.0, (a * v[1] + b * w[1]) * 2.0];
    Mat2R::new(img[0].re, -img[0].im, img[1].re, -img[1].im)
}

/// Sup of `|h b − (h b)ᵀ|`.
pub fn self_adjoint_defect(op: &OperatorField, h: &MetricField) -> f64 {
    op.zip_map(h, |b, g| {
        let m = g * b;
        (m - m.transpose()).norm()
    })
    .data
    .iter()
    .fold(0.0, |a, &v| a.max(v))
}

/// Sup of `|det op − 1|`.
pub fn det_defect(op: &OperatorField) -> f64 {
    op.data.iter().map(|b| (b.determinant() - 1.0).abs()).fold(0.0, f64::max)
}

/// Sup of `|h(b·, b·) − h*|`.
pub fn isometry_defect(b: &OperatorField, h: &MetricField, h_star: &MetricField) -> f64 {
    (0..b.data.len())
        .map(|p| (b.data[p].transpose() * h.data[p] * b.data[p] - h_star.data[p]).norm())
        .fold(0.0, f64::max)
}

/// Pair, operator and complex structure carried by the flow.
#[derive(Debug, Clone)]
pub struct LandslideState {
    pub h: MetricField,
    pub h_star: MetricField,
    pub b: OperatorField,
    pub j: OperatorField,
}

impl LandslideState {
    /// Source state of the data `m`, read from the closed-form fundamental forms.
    pub fn from_data(m: &MetricData) -> Result<Self> {
        let s = m.s;
        let forms = analytic_forms(m, c((-0.5 * s).exp(), 0.0))?.forms;
        let (h, h_star) = metrics_from_forms(&forms, s)?;
        let shape = forms.shape_operator();
        Ok(LandslideState { h, h_star, b: labourie_operator(&shape, s), j: complex_structure(&shape, s) })
    }

    /// Acts by `θ`; the new complex structure is that of `h_θ`.
    pub fn act(&self, theta: f64) -> LandslideState {
        let (h, h_star, b) = landslide_act(&self.h, &self.h_star, &self.b, &self.j, theta);
        let j = h.map(metric_complex_structure);
        LandslideState { h, h_star, b, j }
    }

    /// Largest entry difference over `h`, `h*` and `b`.
    pub fn distance(&self, other: &LandslideState) -> f64 {
        let d = |a: &Field<Mat2R>, b: &Field<Mat2R>| {
            a.data.iter().zip(&b.data).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
        };
        d(&self.h, &other.h).max(d(&self.h_star, &other.h_star)).max(d(&self.b, &other.b))
    }
}

/// `(h(β_θ·, β_θ·), h(β_{θ+π}·, β_{θ+π}·), β_{−θ} b β_θ)`.
pub fn landslide_act(
    h: &MetricField,
    _h_star: &MetricField,
    b: &OperatorField,
    j: &OperatorField,
    theta: f64,
) -> (MetricField, MetricField, OperatorField) {
    let beta = beta_theta(j, b, theta);
    let beta_pi = beta_theta(j, b, theta + std::f64::consts::PI);
    let beta_neg = beta_theta(j, b, -theta);
    let pull = |g: &Mat2R, m: &Mat2R| m.transpose() * g * m;
    let h_t = h.zip_map(&beta, pull);
    let hs_t = h.zip_map(&beta_pi, pull);
    let b_t = Field::from_fn(b.nx, b.ny, |i, jj| beta_neg.get(i, jj) * b.get(i, jj) * beta.get(i, jj));
    (h_t, hs_t, b_t)
}

fn centered(f: &Field<f64>, grid: &DomainGrid, i: usize, j: usize, axis: usize) -> f64 {
    let nx = f.nx;
    if axis == 0 {
        let (l, r) = if grid.is_periodic() && nx == grid.nx { ((i + nx - 1) % nx, (i + 1) % nx) } else { (i - 1, i + 1) };
        (f.get(r, j) - f.get(l, j)) / (2.0 * grid.hx())
    } else {
        (f.get(i, j + 1) - f.get(i, j - 1)) / (2.0 * grid.hy())
    }
}

fn interior_nodes(grid: &DomainGrid, nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let periodic = grid.is_periodic() && nx == grid.nx;
    let (ilo, ihi) = if periodic { (0, nx) } else { (1, nx - 1) };
    (1..ny - 1).flat_map(|j| (ilo..ihi).map(move |i| (i, j))).collect()
}

/// Sup-norm of `d^∇ op (∂ₓ, ∂ᵧ) = ∇ₓ(op ∂ᵧ) − ∇ᵧ(op ∂ₓ)` for the Levi-Civita connection of
/// `h`, with all derivatives by second-order centered differences.
pub fn codazzi_residual(op: &OperatorField, h: &MetricField, grid: &DomainGrid) -> f64 {
    let (nx, ny) = (op.nx, op.ny);
    let comp = |f: &Field<Mat2R>, a: usize, b: usize| f.map(|m| m[(a, b)]);
    let hc = [[comp(h, 0, 0), comp(h, 0, 1)], [comp(h, 1, 0), comp(h, 1, 1)]];
    let bc = [[comp(op, 0, 0), comp(op, 0, 1)], [comp(op, 1, 0), comp(op, 1, 1)]];
    let mut worst: f64 = 0.0;
    for (i, j) in interior_nodes(grid, nx, ny) {
        let mut dg = [[[0.0; 2]; 2]; 2];
        for (l, dgl) in dg.iter_mut().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    dgl[a][b] = centered(&hc[a][b], grid, i, j, l);
                }
            }
        }
        let inv = h.get(i, j).try_inverse().unwrap_or_else(Mat2R::identity);
        let gam = |m: usize, k: usize, jj: usize| -> f64 {
            (0..2).map(|l| 0.5 * inv[(m, l)] * (dg[k][l][jj] + dg[jj][l][k] - dg[l][k][jj])).sum()
        };
        let b = op.get(i, j);
        let mut r = [0.0; 2];
        for (m, rm) in r.iter_mut().enumerate() {
            *rm = centered(&bc[m][1], grid, i, j, 0) - centered(&bc[m][0], grid, i, j, 1)
                + (0..2).map(|k| gam(m, 0, k) * b[(k, 1)] - gam(m, 1, k) * b[(k, 0)]).sum::<f64>();
        }
        worst = worst.max(r[0].hypot(r[1]));
    }
    worst
}

/// Gaussian curvature of a metric field from its Christoffel symbols, using the grid's
/// high-order derivatives; meaningful away from non-periodic edges.
pub fn metric_curvature(grid: &DomainGrid, h: &MetricField) -> Field<f64> {
    let gam = christoffel(grid, h);
    let d = Differ::new(grid);
    let g = |m: usize, k: usize, j: usize| gam.map(|x| c(x[m][k][j], 0.0));
    // R^a_{yxy} = ∂ₓΓ^a_{yy} − ∂ᵧΓ^a_{xy} + Γ^a_{xe}Γ^e_{yy} − Γ^a_{ye}Γ^e_{xy}
    let dx_yy = [d.dx(&g(0, 1, 1)), d.dx(&g(1, 1, 1))];
    let dy_xy = [d.dy(&g(0, 0, 1)), d.dy(&g(1, 0, 1))];
    Field::from_fn(h.nx, h.ny, |i, j| {
        let gm = gam.get(i, j);
        let mut r = [0.0; 2];
        for (a, ra) in r.iter_mut().enumerate() {
            *ra = dx_yy[a].get(i, j).re - dy_xy[a].get(i, j).re
                + (0..2).map(|e| gm[a][0][e] * gm[e][1][1] - gm[a][1][e] * gm[e][0][1]).sum::<f64>();
        }
        let m = h.get(i, j);
        (m[(0, 0)] * r[0] + m[(0, 1)] * r[1]) / m.determinant()
    })
}

/// Landslide report for one angle.
#[derive(Debug, Clone, Serialize)]
pub struct LandslideReport {
    pub theta: f64,
    #[serde(rename = "max_err_I")]
    pub max_err_i: f64,
    #[serde(rename = "max_err_II")]
    pub max_err_ii: f64,
    #[serde(rename = "max_err_III")]
    pub max_err_iii: f64,
    pub codazzi_residual: f64,
    pub flow_additivity_err: f64,
}

/// Forms `(I, II, III)` of the surface of curvature `−1/cosh²(s/2)` carrying a
/// landslide state: `I = cosh²(s/2) h`, `II = I·tanh(s/2) b`, `III = sinh²(s/2) h*`.
pub fn forms_of_state(state: &LandslideState, s: f64) -> FundForms {
    let (ch, sh) = ((0.5 * s).cosh(), (0.5 * s).sinh());
    let first = state.h.map(|g| FormCoeffs::from_matrix(&(g * ch * ch)));
    let second = state.h.zip_map(&state.b, |g, b| FormCoeffs::from_matrix(&(g * b * (ch * sh))));
    let third = state.h_star.map(|g| FormCoeffs::from_matrix(&(g * sh * sh)));
    let valid = Field::filled(state.h.nx, state.h.ny, true);
    FundForms { first, second, third, valid }
}

/// Spectral value `e^{−s/2} e^{i·LANDSLIDE_PHASE_SIGN·θ/2}` of the family member that
/// the landslide by `θ` produces at grafting parameter `s`.
pub fn associated_lambda(s: f64, theta: f64) -> Complex64 {
    Complex64::from_polar((-0.5 * s).exp(), LANDSLIDE_PHASE_SIGN * 0.5 * theta)
}

/// Lands the source pair of `m` by `θ`, converts to forms at grafting parameter `s` and
/// compares them with the closed-form associated-family member.
pub fn associated_check(m: &MetricData, s: f64, theta: f64) -> Result<LandslideReport> {
    let src = LandslideState::from_data(m)?;
    let landed = src.act(theta);
    let forms = forms_of_state(&landed, s);
    let target = analytic_forms(m, associated_lambda(s, theta))?.forms;
    let mut rep = LandslideReport {
        theta,
        max_err_i: 0.0,
        max_err_ii: 0.0,
        max_err_iii: 0.0,
        codazzi_residual: codazzi_residual(&landed.b, &landed.h, &m.grid),
        flow_additivity_err: flow_additivity_error(&src, theta, 0.3),
    };
    for p in 0..forms.first.data.len() {
        rep.max_err_i = rep.max_err_i.max(forms.first.data[p].distance(&target.first.data[p]));
        rep.max_err_ii = rep.max_err_ii.max(forms.second.data[p].distance(&target.second.data[p]));
        rep.max_err_iii = rep.max_err_iii.max(forms.third.data[p].distance(&target.third.data[p]));
    }
    Ok(rep)
}

/// `|L_{θ'}(L_θ(x)) − L_{θ+θ'}(x)|`.
pub fn flow_additivity_error(src: &LandslideState, theta: f64, theta2: f64) -> f64 {
    src.act(theta).act(theta2).distance(&src.act(theta + theta2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_complex_structure_squares_to_minus_one() {
        let g = Mat2R::new(2.0, 0.3, 0.3, 0.7);
        let j = metric_complex_structure(&g);
        assert!((j * j + Mat2R::identity()).norm() < 1e-14);
        assert!((j.transpose() * g * j - g).norm() < 1e-14);
        assert_eq!(metric_complex_structure(&Mat2R::identity()), rotation90());
    }

    #[test]
    fn hyperbolic_half_plane_curvature() {
        let grid = DomainGrid::patch(80, 80, -0.5, 0.5, 1.0, 1.0).unwrap();
        let h = Field::from_fn(80, 80, |_, j| Mat2R::identity() / grid.y(j).powi(2));
        let k = metric_curvature(&grid, &h);
        for j in 8..72 {
            for i in 8..72 {
                assert!((k.get(i, j) + 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn codazzi_of_identity_vanishes() {
        let grid = DomainGrid::patch(12, 12, 0.0, 1.0, 1.0, 1.0).unwrap();
        let h = Field::from_fn(12, 12, |i, j| Mat2R::new(1.0 + grid.x(i), 0.1, 0.1, grid.y(j)));
        let e = Field::filled(12, 12, Mat2R::identity());
        assert!(codazzi_residual(&e, &h, &grid) < 1e-12);
    }

    #[test]
    fn beta_at_zero_is_identity() {
        let j = Field::filled(3, 3, rotation90());
        let b = Field::filled(3, 3, Mat2R::new(2.0, 0.0, 0.0, 0.5));
        let beta = beta_theta(&j, &b, 0.0);
        assert!(beta.data.iter().all(|m| *m == Mat2R::identity()));
    }
}
