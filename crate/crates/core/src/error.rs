use thiserror::Error;

use crate::gauss::MetricData;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    /// The solver converged but `e^{2u} <= |Q|^2 (1 + margin)` somewhere.
    /// The solution is still available.
    #[error("degenerate solution: {nodes} node(s) violate e^2u > |Q|^2")]
    DegenerateSolution { nodes: usize, data: Box<MetricData> },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degenerate forms: {0}")]
    DegenerateForms(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("profile blows up before y = {0}")]
    ProfileBlowUp(f64),

    #[error("flatness residual {residual:e} exceeds {limit:e}")]
    FlatnessTooLarge { residual: f64, limit: f64 },

    #[error("spectral value {0} must satisfy 0 < |λ| < 1")]
    SpectralOnCircle(num_complex::Complex64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
