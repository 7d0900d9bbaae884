use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{basis, c, mat2, Mat2C, SL2C};
use crate::error::{Error, Result};

/// A point `Σ ξⱼ eⱼ` of Minkowski space 𝔼^{1,3} stored by its real coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianVec(pub [f64; 4]);

impl HermitianVec {
    pub const E0: HermitianVec = HermitianVec([1.0, 0.0, 0.0, 0.0]);
    pub const E1: HermitianVec = HermitianVec([0.0, 1.0, 0.0, 0.0]);

    pub fn coords(&self) -> [f64; 4] {
        self.0
    }

    pub fn to_matrix(&self) -> Mat2C {
        let [x0, x1, x2, x3] = self.0;
        mat2(c(x0 + x1, 0.0), c(x3, -x2), c(x3, x2), c(x0 - x1, 0.0))
    }

    /// Reads the coordinates of a matrix, which is first replaced by its Hermitian part.
    pub fn from_matrix(m: &Mat2C) -> Self {
        let a11 = m[(0, 0)].re;
        let a22 = m[(1, 1)].re;
        let a21 = (m[(1, 0)] + m[(0, 1)].conj()) * 0.5;
        HermitianVec([(a11 + a22) * 0.5, (a11 - a22) * 0.5, a21.im, a21.re])
    }

    pub fn det(&self) -> f64 {
        -self.dot(self)
    }

    /// The Lorentzian product in coordinates, `−ξ₀η₀ + ξ₁η₁ + ξ₂η₂ + ξ₃η₃`.
    pub fn dot(&self, other: &HermitianVec) -> f64 {
        let (a, b) = (self.0, other.0);
        -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianVec(self.0.map(|x| x * s))
    }

    pub fn add(&self, o: &HermitianVec) -> Self {
        HermitianVec([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }

    pub fn sub(&self, o: &HermitianVec) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// `g ξ g*`.
    pub fn act(&self, g: &Mat2C) -> Self {
        HermitianVec::from_matrix(&(g * self.to_matrix() * g.adjoint()))
    }
}

/// `⟨ξ, η⟩ = −½ tr(ξ e₂ ᵗη e₂)`, evaluated on the matrix representatives.
pub fn minkowski_inner(xi: &HermitianVec, eta: &HermitianVec) -> f64 {
    let e2 = basis()[2];
    let prod = xi.to_matrix() * e2 * eta.to_matrix().transpose() * e2;
    -0.5 * (prod[(0, 0)] + prod[(1, 1)]).re
}

/// A point of ℍ³ = {det ξ = 1, tr ξ > 0}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Point(HermitianVec);

impl H3Point {
    pub const TOL: f64 = 1e-10;

    pub fn origin() -> Self {
        H3Point(HermitianVec::E0)
    }

    pub fn new(v: HermitianVec) -> Result<Self> {
        if (v.det() - 1.0).abs() > Self::TOL * v.0[0].abs().max(1.0).powi(2) || v.0[0] <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "not a point of H3: det = {}, tr/2 = {}",
                v.det(),
                v.0[0]
            )));
        }
        Ok(H3Point(v))
    }

    pub(crate) fn from_unchecked(v: HermitianVec) -> Self {
        H3Point(v)
    }

    pub fn vec(&self) -> &HermitianVec {
        &self.0
    }

    /// Hyperbolic distance `d = 2 asinh(|x − y|/2)`, where `|x − y|² = ⟨x − y, x − y⟩`;
    /// accurate for nearby points, unlike `acosh(−⟨x, y⟩)`.
    pub fn distance(&self, other: &H3Point) -> f64 {
        let d = self.0.sub(&other.0);
        2.0 * (0.5 * d.dot(&d).max(0.0).sqrt()).asinh()
    }
}

/// A unit tangent vector `(x, v)` of ℍ³: `det v = −1`, `⟨x, v⟩ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitTangent {
    pub x: H3Point,
    pub v: HermitianVec,
}

impl UnitTangent {
    pub const TOL: f64 = 1e-10;

    pub fn new(x: H3Point, v: HermitianVec) -> Result<Self> {
        let scale = x.vec().0[0].max(1.0).powi(2);
        let det_err = (v.det() + 1.0).abs();
        let orth_err = x.vec().dot(&v).abs();
        if det_err > Self::TOL * scale || orth_err > Self::TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "not a unit tangent: det v + 1 = {det_err:e}, <x, v> = {orth_err:e}"
            )));
        }
        Ok(UnitTangent { x, v })
    }
}

/// `π(g) = g g*`.
pub fn project_to_h3(g: &SL2C) -> H3Point {
    let m = g.matrix();
    H3Point(HermitianVec::from_matrix(&(m * m.adjoint())))
}

/// `π_*(g) = (g g*, g e₁ g*)`.
pub fn unit_tangent_of_frame(g: &SL2C) -> UnitTangent {
    let m = g.matrix();
    let v = HermitianVec::E1.act(m);
    UnitTangent { x: project_to_h3(g), v }
}

/// A frame `g` with `π_*(g) = t`, unique up to right multiplication by `diag(e^{it}, e^{−it})`.
/// The phase is fixed by making `g₁₁` (or `g₁₂` when that vanishes) real positive.
pub fn frame_of_unit_tangent(t: &UnitTangent) -> Result<SL2C> {
    let line = super::cp1::geodesic_endpoints(t)?;
    let c1 = line.plus.coords();
    let c2 = line.minus.coords();
    let x = t.x.vec().to_matrix();
    let xinv = x.try_inverse().ok_or_else(|| Error::InvalidArgument("singular x".into()))?;
    let quad = |w: &[Complex64; 2]| -> f64 {
        let v = nalgebra::Vector2::new(w[0], w[1]);
        (v.adjoint() * xinv * v)[(0, 0)].re
    };
    let a = 1.0 / quad(&c1).sqrt();
    let cross = c1[0] * c2[1] - c1[1] * c2[0];
    let b = Complex64::new(1.0, 0.0) / (cross * a);
    let g = mat2(c1[0] * a, c2[0] * b, c1[1] * a, c2[1] * b);
    Ok(SL2C::from_unchecked(g))
}

/// Poincaré-ball coordinates `(ξ₁, ξ₂, ξ₃)/(1 + ξ₀)`.
pub fn to_poincare_ball(x: &H3Point) -> [f64; 3] {
    let [x0, x1, x2, x3] = x.vec().0;
    let d = 1.0 + x0;
    [x1 / d, x2 / d, x3 / d]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sl2(a: [f64; 6]) -> SL2C {
        let m = mat2(c(1.0 + a[0], a[1]), c(a[2], a[3]), c(a[4], -a[5]), c(0.7 - a[1], a[0] * a[5]));
        SL2C::normalize(m).unwrap()
    }

    #[test]
    fn basis_products() {
        let e = [HermitianVec::E0, HermitianVec::E1, HermitianVec([0.0, 0.0, 1.0, 0.0]), HermitianVec([0.0, 0.0, 0.0, 1.0])];
        assert_eq!(minkowski_inner(&e[0], &e[0]), -1.0);
        assert_eq!(minkowski_inner(&e[1], &e[1]), 1.0);
        assert_eq!(minkowski_inner(&e[0], &e[1]), 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i != j { 0.0 } else if i == 0 { -1.0 } else { 1.0 };
                assert!((minkowski_inner(&e[i], &e[j]) - want).abs() < 1e-15);
                assert!((e[i].dot(&e[j]) - want).abs() < 1e-15);
            }
        }
        for (k, m) in basis().iter().enumerate() {
            assert_eq!(HermitianVec::from_matrix(m), e[k]);
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_h3(&SL2C::identity()).vec(), &HermitianVec::E0);
        let g = SL2C::new(mat2(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0))).unwrap();
        let x = project_to_h3(&g);
        assert_eq!(x.vec().to_matrix(), mat2(c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.25, 0.0)));
        let t = unit_tangent_of_frame(&SL2C::identity());
        assert_eq!((t.x.vec(), t.v), (&HermitianVec::E0, HermitianVec::E1));
        let b = to_poincare_ball(&x);
        assert!((b[0] - 0.6).abs() < 1e-15 && b[1] == 0.0 && b[2] == 0.0);
        assert_eq!(to_poincare_ball(&H3Point::origin()), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn frame_of_unit_tangent_inverts_projection() {
        let g = sl2([0.3, -0.2, 0.9, 0.1, -0.4, 0.6]);
        let t = unit_tangent_of_frame(&g);
        let h = frame_of_unit_tangent(&t).unwrap();
        let t2 = unit_tangent_of_frame(&h);
        assert!(t2.x.vec().sub(t.x.vec()).0.iter().all(|d| d.abs() < 1e-12));
        assert!(t2.v.sub(&t.v).0.iter().all(|d| d.abs() < 1e-12));
        assert!((h.det() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn rejects_invalid_points() {
        assert!(H3Point::new(HermitianVec([-1.0, 0.0, 0.0, 0.0])).is_err());
        assert!(H3Point::new(HermitianVec([2.0, 0.0, 0.0, 0.0])).is_err());
        assert!(UnitTangent::new(H3Point::origin(), HermitianVec::E0).is_err());
    }

    proptest! {
        #[test]
        fn inner_is_minus_det(x in prop::array::uniform4(-3.0f64..3.0), y in prop::array::uniform4(-3.0f64..3.0)) {
            let xi = HermitianVec(x);
            let eta = HermitianVec(y);
            let det = xi.to_matrix().determinant().re;
            prop_assert!((minkowski_inner(&xi, &xi) + det).abs() < 1e-12);
            prop_assert!((minkowski_inner(&xi, &eta) - minkowski_inner(&eta, &xi)).abs() < 1e-12);
            prop_assert!((minkowski_inner(&xi, &eta) - xi.dot(&eta)).abs() < 1e-12);
        }

        #[test]
        fn projections_land_in_their_spaces(a in prop::array::uniform6(-0.5f64..0.5)) {
            let g = sl2(a);
            let t = unit_tangent_of_frame(&g);
            prop_assert!(H3Point::new(*t.x.vec()).is_ok());
            prop_assert!((t.v.det() + 1.0).abs() < 1e-12);
            prop_assert!(minkowski_inner(t.x.vec(), &t.v).abs() < 1e-12);
            prop_assert!(UnitTangent::new(t.x, t.v).is_ok());
            let b = to_poincare_ball(&t.x);
            prop_assert!(b.iter().map(|v| v * v).sum::<f64>() < 1.0);
        }
    }
}
