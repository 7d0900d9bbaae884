use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{c, Mat2C};
use super::minkowski::UnitTangent;
use crate::error::{Error, Result};

/// A point of ℂP¹ = ∂ℍ³, stored as a unit vector whose first nonzero entry is real positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CP1Point([Complex64; 2]);

impl CP1Point {
    pub fn new(w1: Complex64, w2: Complex64) -> Result<Self> {
        let n = (w1.norm_sqr() + w2.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(format!("[{w1} : {w2}] is not a point of CP1")));
        }
        let lead = if w1.norm() > 0.0 { w1 } else { w2 };
        let phase = lead.conj() / lead.norm();
        Ok(CP1Point([w1 * phase / n, w2 * phase / n]))
    }

    /// The point `[z : 1]`.
    pub fn from_affine(z: Complex64) -> Self {
        CP1Point::new(z, c(1.0, 0.0)).expect("finite affine point")
    }

    pub fn infinity() -> Self {
        CP1Point([c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn coords(&self) -> [Complex64; 2] {
        self.0
    }

    /// `|w₁v₂ − w₂v₁|` for unit representatives: the sine of the angle between the lines, in `[0, 1]`.
    pub fn chordal(&self, other: &CP1Point) -> f64 {
        (self.0[0] * other.0[1] - self.0[1] * other.0[0]).norm()
    }

    pub fn apply(&self, m: &Mat2C) -> Result<Self> {
        let w = self.0;
        CP1Point::new(m[(0, 0)] * w[0] + m[(0, 1)] * w[1], m[(1, 0)] * w[0] + m[(1, 1)] * w[1])
    }
}

/// An oriented geodesic of ℍ³, given by its forward and backward endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicLine {
    pub plus: CP1Point,
    pub minus: CP1Point,
}

impl GeodesicLine {
    pub fn new(plus: CP1Point, minus: CP1Point) -> Result<Self> {
        if plus.chordal(&minus) <= 1e-10 {
            return Err(Error::DegenerateConfiguration("geodesic endpoints coincide".into()));
        }
        Ok(GeodesicLine { plus, minus })
    }
}

/// Endpoints of the geodesic through `x` with initial velocity `v`.
///
/// With `(x, v) = (g g*, g e₁ g*)` the operator `P = v x⁻¹ = g e₁ g⁻¹` is an involution whose
/// `+1` eigenline is the first column of `g` (the forward endpoint) and whose `−1` eigenline
/// is the second. The columns of `P ± I` span those eigenlines.
pub fn geodesic_endpoints(t: &UnitTangent) -> Result<GeodesicLine> {
    let ut = UnitTangent::new(t.x, t.v)?;
    let x = ut.x.vec().to_matrix();
    let v = ut.v.to_matrix();
    let xinv = x
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular base point".into()))?;
    let p = v * xinv;
    let id = Mat2C::identity();
    let plus = dominant_column(&(p + id))?;
    let minus = dominant_column(&(p - id))?;
    GeodesicLine::new(plus, minus)
}

fn dominant_column(m: &Mat2C) -> Result<CP1Point> {
    let n0 = m[(0, 0)].norm_sqr() + m[(1, 0)].norm_sqr();
    let n1 = m[(0, 1)].norm_sqr() + m[(1, 1)].norm_sqr();
    if n0 >= n1 {
        CP1Point::new(m[(0, 0)], m[(1, 0)])
    } else {
        CP1Point::new(m[(0, 1)], m[(1, 1)])
    }
}
