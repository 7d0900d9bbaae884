//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! kind = "cylinder"          # or "patch" (then x0, y0 give the lower-left corner)
//! nx = 128
//! ny = 128
//! lx = 1.5
//! ly = 1.5
//!
//! [data]
//! kind = "profile"           # "profile", "patch" or "zero-connection"
//! s = 2.0                    # or curvature = K with −1 < K < 0
//! q = [1.0, 0.0]             # constant Q; or q_coeffs = [[re, im], ...] in powers of z
//! u0 = 0.5                   # profile only; patches use boundary_u
//! perturbation = 0.0         # amplitude of an injected sin(2πy/Ly) term in u
//!
//! [spectral]
//! lambdas = [[0.3, 0.1]]
//! lambda0 = [0.36787944117144233, 0.0]
//! thetas = [0.0, 0.7853981633974483]
//! q = [[0.1353352832366127, 0.0]]
//! q_grid = { center = [0.0, 0.1353352832366127], spacing = 1e-3, points = 5 }
//!
//! [tolerances]
//! flatness = 1e-8
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::frame::ConnectionForm;
use crate::gauss::{solve_patch, solve_profile_ode, MetricData, PatchOptions, QPolynomial};
use crate::grid::{DomainGrid, Field};
use crate::holonomy::CrScan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKindSpec {
    Cylinder,
    Patch,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKindSpec,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
}

impl DomainSpec {
    pub fn grid(&self) -> Result<DomainGrid> {
        match self.kind {
            DomainKindSpec::Cylinder => DomainGrid::cylinder(self.nx, self.ny, self.lx, self.ly),
            DomainKindSpec::Patch => DomainGrid::patch(self.nx, self.ny, self.x0, self.y0, self.lx, self.ly),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// y-dependent solution on a cylinder with constant `Q`.
    Profile,
    /// Dirichlet problem on a patch.
    Patch,
    /// The zero connection: every frame is the identity.
    ZeroConnection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub kind: DataKind,
    pub s: Option<f64>,
    pub curvature: Option<f64>,
    pub q: Option<[f64; 2]>,
    pub q_coeffs: Option<Vec<[f64; 2]>>,
    pub u0: Option<f64>,
    pub boundary_u: Option<f64>,
    #[serde(default)]
    pub perturbation: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QGridSpec {
    pub center: [f64; 2],
    pub spacing: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    #[serde(default)]
    pub lambdas: Vec<[f64; 2]>,
    pub lambda0: Option<[f64; 2]>,
    #[serde(default)]
    pub thetas: Vec<f64>,
    #[serde(default)]
    pub q: Vec<[f64; 2]>,
    pub q_grid: Option<QGridSpec>,
}

/// Pass thresholds of the verification suites. All are scaled by `--tolerance-scale`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub gauss: f64,
    pub flatness: f64,
    pub forms: f64,
    pub curvature: f64,
    pub congruence: f64,
    pub structure: f64,
    pub additivity: f64,
    pub codazzi: f64,
    pub holonomy: f64,
    pub equivariance: f64,
    pub cr: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gauss: 1e-9,
            flatness: 1e-8,
            forms: 2e-3,
            curvature: 1e-3,
            congruence: 1e-8,
            structure: 1e-6,
            additivity: 1e-8,
            codazzi: 1e-3,
            holonomy: 1e-6,
            equivariance: 1e-8,
            cr: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, k: f64) -> Tolerances {
        Tolerances {
            gauss: self.gauss * k,
            flatness: self.flatness * k,
            forms: self.forms * k,
            curvature: self.curvature * k,
            congruence: self.congruence * k,
            structure: self.structure * k,
            additivity: self.additivity * k,
            codazzi: self.codazzi * k,
            holonomy: self.holonomy * k,
            equivariance: self.equivariance * k,
            cr: self.cr * k,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub spectral: SpectralSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

fn cx(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks everything that can be checked without running a numerical stage.
    pub fn validate(&self) -> Result<()> {
        let grid = self.domain.grid().map_err(|e| config_err(format!("domain: {e}")))?;
        let d = &self.data;
        match (d.s, d.curvature) {
            (Some(_), Some(_)) => return Err(config_err("data: give either s or curvature, not both")),
            (None, None) if d.kind != DataKind::ZeroConnection => {
                return Err(config_err("data: one of s or curvature is required"))
            }
            _ => {}
        }
        if let Some(s) = d.s {
            if !(s > 0.0 && s.is_finite()) {
                return Err(config_err("data.s must be positive"));
            }
        }
        if let Some(k) = d.curvature {
            MetricData::s_from_curvature(k).map_err(|e| config_err(format!("data.curvature: {e}")))?;
        }
        if d.q.is_some() && d.q_coeffs.is_some() {
            return Err(config_err("data: give either q or q_coeffs, not both"));
        }
        if !d.perturbation.is_finite() {
            return Err(config_err("data.perturbation must be finite"));
        }
        match d.kind {
            DataKind::Profile => {
                if grid.kind != crate::grid::DomainKind::Cylinder {
                    return Err(config_err("profile data needs a cylinder domain"));
                }
                if d.q_coeffs.is_some() {
                    return Err(config_err("profile data needs a constant q"));
                }
                if d.u0.is_none() {
                    return Err(config_err("profile data needs u0"));
                }
            }
            DataKind::Patch => {
                if grid.kind != crate::grid::DomainKind::Patch {
                    return Err(config_err("patch data needs a patch domain"));
                }
                if d.boundary_u.is_none() {
                    return Err(config_err("patch data needs boundary_u"));
                }
            }
            DataKind::ZeroConnection => {}
        }
        let sp = &self.spectral;
        for l in sp.lambdas.iter().chain(&sp.lambda0) {
            let n = cx(*l).norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(config_err(format!("spectral value {l:?} must be nonzero")));
            }
        }
        for q in sp.q.iter().chain(sp.q_grid.as_ref().map(|g| &g.center)) {
            let n = cx(*q).norm();
            if !(n > 0.0 && n <= 1.0) {
                return Err(config_err(format!("q = {q:?} must satisfy 0 < |q| <= 1")));
            }
        }
        if let Some(g) = &sp.q_grid {
            if g.points < 5 || !(g.spacing > 0.0) {
                return Err(config_err("q_grid needs at least 5 points and a positive spacing"));
            }
            let reach = g.spacing * (g.points - 1) as f64 / 2.0 * std::f64::consts::SQRT_2;
            let r = cx(g.center).norm();
            if r - reach <= 0.0 || r + reach >= 1.0 {
                return Err(config_err("q_grid must lie inside the punctured unit disk"));
            }
        }
        if sp.thetas.iter().any(|t| !t.is_finite()) {
            return Err(config_err("thetas must be finite"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<DomainGrid> {
        self.domain.grid()
    }

    pub fn s(&self) -> Result<f64> {
        match (self.data.s, self.data.curvature) {
            (Some(s), _) => Ok(s),
            (None, Some(k)) => MetricData::s_from_curvature(k),
            _ => Err(config_err("data: s is not set")),
        }
    }

    pub fn q_polynomial(&self) -> QPolynomial {
        match (&self.data.q_coeffs, self.data.q) {
            (Some(coeffs), _) => QPolynomial(coeffs.iter().map(|p| cx(*p)).collect()),
            (None, Some(q)) => QPolynomial::constant(cx(q)),
            (None, None) => QPolynomial::constant(Complex64::new(1.0, 0.0)),
        }
    }

    /// Solves for the data, then adds the configured perturbation to `u`.
    pub fn metric_data(&self) -> Result<MetricData> {
        let grid = self.grid()?;
        let s = self.s()?;
        let mut m = match self.data.kind {
            DataKind::Profile => {
                let q0 = self.q_polynomial().0.first().copied().unwrap_or_default();
                solve_profile_ode(s, q0, self.data.u0.unwrap_or_default(), &grid)?
            }
            DataKind::Patch => {
                let boundary = Field::filled(grid.nx, grid.ny, self.data.boundary_u.unwrap_or_default());
                solve_patch(&self.q_polynomial(), s, &grid, &boundary, PatchOptions::default())?
            }
            DataKind::ZeroConnection => return Err(config_err("zero-connection data has no metric")),
        };
        let eps = self.data.perturbation;
        if eps != 0.0 {
            let u = Field::from_fn(grid.nx, grid.ny, |i, j| {
                m.u.get(i, j) + eps * (2.0 * std::f64::consts::PI * (grid.y(j) - grid.y(0)) / grid.ly).sin()
            });
            m = MetricData::new(grid, u, m.q.clone(), s)?;
        }
        Ok(m)
    }

    pub fn connection(&self) -> Result<(Option<MetricData>, ConnectionForm)> {
        if self.data.kind == DataKind::ZeroConnection {
            return Ok((None, ConnectionForm::zero(&self.grid()?)));
        }
        let m = self.metric_data()?;
        let conn = crate::frame::build_connection(&m);
        Ok((Some(m), conn))
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.spectral.lambdas.iter().map(|p| cx(*p)).collect()
    }

    /// `λ₀`, defaulting to `e^{−s/2}` when data is present.
    pub fn lambda0(&self) -> Option<Complex64> {
        self.spectral.lambda0.map(cx).or_else(|| self.s().ok().map(|s| Complex64::new((-0.5 * s).exp(), 0.0)))
    }

    pub fn qs(&self) -> Vec<Complex64> {
        self.spectral.q.iter().map(|p| cx(*p)).collect()
    }

    pub fn cr_scan(&self) -> Option<(Complex64, CrScan)> {
        self.spectral
            .q_grid
            .as_ref()
            .map(|g| (cx(g.center), CrScan { delta: g.spacing, points: g.points }))
    }
}
