//! Developing maps into ℂP¹, holonomy records and the complex landslide pipeline.
//!
//! For `q` in the punctured closed disk, `s = −log|q|` and `θ = −arg q`. The structure
//! `P_q` is obtained by landsliding the source pair by `θ`, building the surface of
//! curvature `−1/cosh²(s/2)` that carries the landslid pair, and developing the forward
//! endpoints of its normal geodesics. Its holonomy is compared with the loop holonomy of
//! the flat family at `μ = √q`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{geodesic_endpoints, moebius_apply, moebius_fit, CP1Point, MoebiusMap, UnitTangent, SL2C};
use crate::error::{Error, Result};
use crate::frame::{loop_holonomy, untwist_connection, ConnectionForm, ExtendedFrame, LoopSpec};
use crate::gauss::MetricData;
use crate::grid::{DomainGrid, Field};
use crate::landslide::LandslideState;
use crate::surface::{reconstruct_from_forms, Mat2R, SurfaceMesh};

/// Minimal chordal distance between neighbouring values of a developing map.
pub const LOCAL_INJECTIVITY: f64 = 1e-10;

/// Where a developing map came from.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub source: String,
    pub s: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct DevelopingMap {
    pub grid: DomainGrid,
    pub mu: Complex64,
    pub points: Field<CP1Point>,
    pub provenance: Provenance,
}

impl DevelopingMap {
    /// Smallest chordal distance between horizontally or vertically adjacent values.
    pub fn min_adjacent_separation(&self) -> f64 {
        let p = &self.points;
        let mut worst = f64::INFINITY;
        for j in 0..p.ny {
            for i in 0..p.nx {
                if i + 1 < p.nx {
                    worst = worst.min(p.get(i, j).chordal(p.get(i + 1, j)));
                }
                if j + 1 < p.ny {
                    worst = worst.min(p.get(i, j).chordal(p.get(i, j + 1)));
                }
            }
        }
        worst
    }

    fn validated(self) -> Result<Self> {
        let sep = self.min_adjacent_separation();
        if !(sep > LOCAL_INJECTIVITY) {
            return Err(Error::DegenerateConfiguration(format!("developing map not locally injective ({sep:e})")));
        }
        Ok(self)
    }

    /// Sup of `chordal(dev(x + Lx, y), H·dev(x, y))` over the sampled sheet overlap.
    pub fn equivariance_residual(&self, h: &MoebiusMap) -> Result<f64> {
        let nx = self.grid.nx;
        if self.points.nx <= nx {
            return Err(Error::InvalidArgument("developing map does not reach the next sheet".into()));
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.points.ny {
            for i in 0..self.points.nx - nx {
                let img = moebius_apply(h, self.points.get(i, j));
                worst = worst.max(img.chordal(self.points.get(i + nx, j)));
            }
        }
        Ok(worst)
    }
}

fn check_disk(mu: Complex64) -> Result<()> {
    let r = mu.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::SpectralOnCircle(mu));
    }
    Ok(())
}

/// `[F₁₁ : F₂₁]`, the forward endpoints of the Lagrangian Gauss map.
pub fn developing_map(frame: &ExtendedFrame) -> Result<DevelopingMap> {
    check_disk(frame.lambda)?;
    let data = frame
        .frames
        .data
        .iter()
        .map(|g| {
            let m = g.matrix();
            CP1Point::new(m[(0, 0)], m[(1, 0)])
        })
        .collect::<Result<Vec<_>>>()?;
    let s = -2.0 * frame.lambda.norm().ln();
    DevelopingMap {
        grid: frame.grid,
        mu: frame.lambda,
        points: Field { nx: frame.frames.nx, ny: frame.frames.ny, data },
        provenance: Provenance { source: "extended frame".into(), s, theta: -2.0 * frame.lambda.arg() },
    }
    .validated()
}

/// Forward endpoints of the normal geodesics of a surface.
pub fn developing_map_of_surface(mesh: &SurfaceMesh, mu: Complex64, provenance: Provenance) -> Result<DevelopingMap> {
    let data = mesh
        .f
        .data
        .par_iter()
        .zip(&mesh.n.data)
        .map(|(f, n)| Ok(geodesic_endpoints(&UnitTangent::new(*f, *n)?)?.plus))
        .collect::<Result<Vec<_>>>()?;
    DevelopingMap { grid: mesh.grid, mu, points: Field { nx: mesh.f.nx, ny: mesh.f.ny, data }, provenance }.validated()
}

/// Holonomy of one generator, defined up to sign.
#[derive(Debug, Clone)]
pub struct HolonomyRecord {
    pub generator: String,
    pub matrix: SL2C,
    pub moebius: MoebiusMap,
    pub mu: Complex64,
    pub q: Complex64,
}

impl HolonomyRecord {
    pub fn new(generator: &str, matrix: SL2C, mu: Complex64, q: Complex64) -> Self {
        HolonomyRecord { generator: generator.into(), matrix, moebius: MoebiusMap(matrix), mu, q }
    }

    /// Trace of the representative, meaningful up to sign.
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Same class with the other sign.
    pub fn negated(&self) -> Self {
        let m = SL2C::normalize(self.matrix.matrix().map(|v| -v)).expect("negation keeps det 1");
        HolonomyRecord { matrix: m, moebius: MoebiusMap(m), ..self.clone() }
    }

    pub fn det_error(&self) -> f64 {
        (self.matrix.det() - 1.0).norm()
    }
}

pub const X_GENERATOR: &str = "x-period";

/// Principal square root, with `|q| ≤ 1`, `q ≠ 0`.
pub fn sqrt_q(q: Complex64) -> Result<Complex64> {
    if !(q.norm() > 0.0 && q.norm() <= 1.0 + 1e-15) {
        return Err(Error::InvalidArgument(format!("q = {q} must satisfy 0 < |q| <= 1")));
    }
    Ok(q.sqrt())
}

/// Loop holonomy of the flat family at `μ = √q` around the cylinder at `row`.
pub fn frame_holonomy_at_sqrt_q(conn: &ConnectionForm, q: Complex64, row: usize) -> Result<HolonomyRecord> {
    let mu = sqrt_q(q)?;
    let h = loop_holonomy(conn, mu, LoopSpec::XPeriod { row })?;
    Ok(HolonomyRecord::new(X_GENERATOR, h, mu, q))
}

/// Fits the Möbius map with `dev(x + Lx, y) = H dev(x, y)` over every `stride`-th node of
/// the overlap between the first two sheets.
pub fn dev_holonomy_with(dev: &DevelopingMap, q: Complex64, stride: usize) -> Result<HolonomyRecord> {
    let nx = dev.grid.nx;
    if !dev.grid.is_periodic() || dev.points.nx <= nx {
        return Err(Error::InvalidArgument("holonomy needs a developing map over two sheets of a cylinder".into()));
    }
    let stride = stride.max(1);
    let mut pairs = Vec::new();
    for j in (0..dev.points.ny).step_by(stride) {
        for i in (0..dev.points.nx - nx).step_by(stride) {
            pairs.push((*dev.points.get(i, j), *dev.points.get(i + nx, j)));
        }
    }
    let m = moebius_fit(&pairs)?;
    Ok(HolonomyRecord::new(X_GENERATOR, m.0, dev.mu, q))
}

pub fn dev_holonomy(dev: &DevelopingMap, q: Complex64) -> Result<HolonomyRecord> {
    dev_holonomy_with(dev, q, 4)
}

/// `min(|tr a − tr b|, |tr a + tr b|)`: conjugation-invariant and blind to the sign of
/// either representative.
pub fn compare_holonomy(a: &HolonomyRecord, b: &HolonomyRecord) -> f64 {
    let (ta, tb) = (a.trace(), b.trace());
    (ta - tb).norm().min((ta + tb).norm())
}

/// Cauchy–Riemann scan of `t(q) = tr Ĥ(q)` for the untwisted form on a square grid.
#[derive(Debug, Clone, Serialize)]
pub struct CrReport {
    pub center: [f64; 2],
    pub spacing: f64,
    pub points: usize,
    /// Max of `|∂t/∂q̄|` over interior grid points.
    pub cr_residual: f64,
    /// Same for `q ↦ conj(t(q))`.
    pub control_residual: f64,
    /// Max of `|∂t/∂q|`, the scale the residual is measured against.
    pub derivative_scale: f64,
}

/// Centered-difference `∂/∂q̄` and `∂/∂q` of samples on a square grid with spacing `delta`.
/// Fourth-order 5-point arms are used where they fit, 3-point arms otherwise. The
/// second-order truncation `δ²|t‴|/6` alone exceeds 1e-4 near `|q| = e⁻²`.
pub fn cr_residuals(values: &[Complex64], points: usize, delta: f64) -> (f64, f64) {
    let at = |a: usize, b: usize| values[b * points + a];
    let i = Complex64::new(0.0, 1.0);
    let (margin, fourth) = if points >= 5 { (2, true) } else { (1, false) };
    let mut dbar: f64 = 0.0;
    let mut dq: f64 = 0.0;
    for b in margin..points - margin {
        for a in margin..points - margin {
            let (tx, ty) = if fourth {
                (
                    (at(a - 2, b) - at(a - 1, b) * 8.0 + at(a + 1, b) * 8.0 - at(a + 2, b)) / (12.0 * delta),
                    (at(a, b - 2) - at(a, b - 1) * 8.0 + at(a, b + 1) * 8.0 - at(a, b + 2)) / (12.0 * delta),
                )
            } else {
                ((at(a + 1, b) - at(a - 1, b)) / (2.0 * delta), (at(a, b + 1) - at(a, b - 1)) / (2.0 * delta))
            };
            dbar = dbar.max(((tx + i * ty) * 0.5).norm());
            dq = dq.max(((tx - i * ty) * 0.5).norm());
        }
    }
    (dbar, dq)
}

pub fn holomorphy_scan(
    conn: &ConnectionForm,
    center: Complex64,
    delta: f64,
    points: usize,
    row: usize,
) -> Result<CrReport> {
    if points < 3 {
        return Err(Error::InvalidArgument("scan needs at least 3 points per side".into()));
    }
    let hat = untwist_connection(conn);
    let half = (points - 1) as f64 / 2.0;
    let qs: Vec<Complex64> = (0..points * points)
        .map(|p| center + Complex64::new(((p % points) as f64 - half) * delta, ((p / points) as f64 - half) * delta))
        .collect();
    for q in &qs {
        check_disk(*q)?;
    }
    let values = qs
        .par_iter()
        .map(|&q| Ok(loop_holonomy(&hat, q, LoopSpec::XPeriod { row })?.trace()))
        .collect::<Result<Vec<_>>>()?;
    let (cr, scale) = cr_residuals(&values, points, delta);
    let conj: Vec<Complex64> = values.iter().map(|v| v.conj()).collect();
    let (control, _) = cr_residuals(&conj, points, delta);
    Ok(CrReport {
        center: [center.re, center.im],
        spacing: delta,
        points,
        cr_residual: cr,
        control_residual: control,
        derivative_scale: scale,
    })
}

/// Output of the complex landslide pipeline at one `q`.
#[derive(Debug, Clone)]
pub struct LandslideStructure {
    pub q: Complex64,
    pub s: f64,
    pub theta: f64,
    pub mu: Complex64,
    pub developing_map: Option<DevelopingMap>,
    pub frame_record: HolonomyRecord,
    pub dev_record: Option<HolonomyRecord>,
    pub compare_residual: Option<f64>,
    pub cr: Option<CrReport>,
}

/// Verification row of one `q`.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub q: [f64; 2],
    pub s: f64,
    pub theta: f64,
    pub mu: [f64; 2],
    pub trace_frame: [f64; 2],
    pub trace_dev: Option<[f64; 2]>,
    pub compare_residual: Option<f64>,
    pub cr_residual: Option<f64>,
}

impl LandslideStructure {
    pub fn report(&self) -> VerificationReport {
        let pair = |z: Complex64| [z.re, z.im];
        VerificationReport {
            q: pair(self.q),
            s: self.s,
            theta: self.theta,
            mu: pair(self.mu),
            trace_frame: pair(self.frame_record.trace()),
            trace_dev: self.dev_record.as_ref().map(|r| pair(r.trace())),
            compare_residual: self.compare_residual,
            cr_residual: self.cr.as_ref().map(|c| c.cr_residual),
        }
    }
}

/// Optional Cauchy–Riemann scan around `q`.
#[derive(Debug, Clone, Copy)]
pub struct CrScan {
    pub delta: f64,
    pub points: usize,
}

/// Runs the pipeline for the source data `m` at `q`. On `|q| = 1` only the frame record
/// is produced.
pub fn complex_landslide(m: &MetricData, conn: &ConnectionForm, q: Complex64, scan: Option<CrScan>) -> Result<LandslideStructure> {
    let mu = sqrt_q(q)?;
    let s = -q.norm().ln();
    let theta = -q.arg();
    let row = m.grid.ny / 2;
    let frame_record = frame_holonomy_at_sqrt_q(conn, q, row)?;
    let mut out = LandslideStructure {
        q,
        s,
        theta,
        mu,
        developing_map: None,
        frame_record,
        dev_record: None,
        compare_residual: None,
        cr: None,
    };
    if (q.norm() - 1.0).abs() <= 1e-15 {
        return Ok(out);
    }
    let landed = LandslideState::from_data(m)?.act(theta);
    let (ch2, th) = ((0.5 * s).cosh().powi(2), (0.5 * s).tanh());
    let first: Field<Mat2R> = landed.h.map(|g| g * ch2);
    let shape: Field<Mat2R> = landed.b.map(|b| b * th);
    let mesh = reconstruct_from_forms(&m.grid, &first, &shape, (0, row), m.grid.nx)?;
    let dev = developing_map_of_surface(&mesh, mu, Provenance { source: "landslide surface".into(), s, theta })?;
    let dev_record = dev_holonomy(&dev, q)?;
    out.compare_residual = Some(compare_holonomy(&out.frame_record, &dev_record));
    out.dev_record = Some(dev_record);
    out.developing_map = Some(dev);
    if let Some(scan) = scan {
        out.cr = Some(holomorphy_scan(conn, q, scan.delta, scan.points, row)?);
    }
    Ok(out)
}
