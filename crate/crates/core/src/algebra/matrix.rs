use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex 2×2 matrix.
pub type Mat2C = Matrix2<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a matrix from its entries in row-major order.
#[inline]
pub fn mat2(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Mat2C {
    Mat2C::new(a11, a12, a21, a22)
}

/// The basis `e₀ = id, e₁ = diag(1, −1), e₂ = [[0, −i], [i, 0]], e₃ = [[0, 1], [1, 0]]`
/// of the Hermitian matrices.
pub fn basis() -> [Mat2C; 4] {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        mat2(one, o, o, one),
        mat2(one, o, o, -one),
        mat2(o, -i, i, o),
        mat2(o, one, one, o),
    ]
}

/// Matrix exponential of a 2×2 complex matrix.
///
/// Uses `exp(M) = e^{tr/2} (cosh(r) I + sinh(r)/r N)` with `N` the traceless part and
/// `r² = −det N`, so the result is exact up to rounding.
pub fn exp_mat2(m: &Mat2C) -> Mat2C {
    let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let n = m - Mat2C::identity() * half_tr;
    let r2 = -(n[(0, 0)] * n[(1, 1)] - n[(0, 1)] * n[(1, 0)]);
    let (ch, shc) = cosh_sinhc(r2);
    (Mat2C::identity() * ch + n * shc) * half_tr.exp()
}

/// `(cosh √z, sinh(√z)/√z)`, even functions of `√z`, hence entire in `z`.
fn cosh_sinhc(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 1e-3 {
        // Taylor series, truncation below 1e-20 for |z| < 1e-3.
        let mut ch = c(1.0, 0.0);
        let mut shc = c(1.0, 0.0);
        let mut term_c = c(1.0, 0.0);
        let mut term_s = c(1.0, 0.0);
        for k in 1..8 {
            let k = k as f64;
            term_c = term_c * z / ((2.0 * k - 1.0) * (2.0 * k));
            term_s = term_s * z / ((2.0 * k) * (2.0 * k + 1.0));
            ch += term_c;
            shc += term_s;
        }
        (ch, shc)
    } else {
        let r = z.sqrt();
        (r.cosh(), r.sinh() / r)
    }
}

/// Unit-determinant complex 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SL2C(Mat2C);

impl SL2C {
    pub const DET_TOL: f64 = 1e-12;

    pub fn identity() -> Self {
        SL2C(Mat2C::identity())
    }

    /// Divides by a square root of the determinant. Fails on (near) singular input.
    pub fn normalize(m: Mat2C) -> Result<Self> {
        let det = m.determinant();
        if !(det.norm() > 1e-300) || !det.is_finite() {
            return Err(Error::InvalidArgument(format!("singular matrix, det = {det}")));
        }
        Ok(SL2C(m / det.sqrt()))
    }

    /// Wraps `m`, which must already have determinant 1.
    pub fn new(m: Mat2C) -> Result<Self> {
        let det = m.determinant();
        if (det - 1.0).norm() > Self::DET_TOL * m.norm_squared().max(1.0) {
            return Err(Error::InvalidArgument(format!("det = {det}, expected 1")));
        }
        Ok(SL2C(m))
    }

    pub(crate) fn from_unchecked(m: Mat2C) -> Self {
        SL2C(m)
    }

    pub fn matrix(&self) -> &Mat2C {
        &self.0
    }

    pub fn into_matrix(self) -> Mat2C {
        self.0
    }

    /// The inverse `[[d, −b], [−c, a]]`.
    pub fn inverse(&self) -> Self {
        let m = &self.0;
        SL2C(mat2(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]))
    }

    pub fn adjoint(&self) -> Self {
        SL2C(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn det(&self) -> Complex64 {
        self.0.determinant()
    }
}

impl std::ops::Mul for SL2C {
    type Output = SL2C;
    fn mul(self, rhs: SL2C) -> SL2C {
        SL2C(self.0 * rhs.0)
    }
}
