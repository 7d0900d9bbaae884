//! Sixth-order Magnus propagators for linear ODEs `F' = F A(t)` sampled on a uniform grid.
//!
//! The coefficient is interpolated at the three Gauss–Legendre nodes of each step by a
//! degree-5 Lagrange polynomial on the six nearest samples. On non-periodic axes the
//! stencil is shifted inward at the ends.

use nalgebra::Matrix4;

use crate::algebra::{exp_mat2, Mat2C};

/// Matrices the propagator can work with.
pub trait MagnusAlgebra: Copy {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn exp(&self) -> Self;

    /// Commutator for right multiplication, `[X, Y] = YX − XY`. Transposition turns
    /// `F' = F A` into `G' = Aᵀ G` and reverses every commutator.
    fn bracket(&self, other: &Self) -> Self {
        other.mul(self).sub(&self.mul(other))
    }
}

impl MagnusAlgebra for Mat2C {
    fn zero() -> Self {
        Mat2C::zeros()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }
    fn exp(&self) -> Self {
        exp_mat2(self)
    }
}

impl MagnusAlgebra for Matrix4<f64> {
    fn zero() -> Self {
        Matrix4::zeros()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn exp(&self) -> Self {
        Matrix4::exp(self)
    }
}

/// Number of samples each step reads.
pub const STENCIL: usize = 6;

/// `√15 / 10`: Gauss–Legendre nodes sit at `1/2 ∓ GAUSS3` and `1/2`.
const GAUSS3: f64 = 0.387_298_334_620_741_7;

/// Lagrange weights on nodes `0..STENCIL` at `t`.
pub fn lagrange_weights(t: f64) -> [f64; STENCIL] {
    let mut w = [1.0; STENCIL];
    for (k, wk) in w.iter_mut().enumerate() {
        for m in 0..STENCIL {
            if m != k {
                *wk *= (t - m as f64) / (k as f64 - m as f64);
            }
        }
    }
    w
}

/// Propagator `M` with `F(a + 1) = F(a) M`, where `sample(k)` is the coefficient at node `k`
/// of an axis with `n` nodes and spacing `h`. Periodic axes may be sampled at any integer.
pub fn magnus_step<M: MagnusAlgebra>(sample: impl Fn(isize) -> M, a: isize, n: usize, periodic: bool, h: f64) -> M {
    let back = (STENCIL as isize - 2) / 2;
    let start = if periodic { a - back } else { (a - back).clamp(0, n as isize - STENCIL as isize) };
    let nodes: [M; STENCIL] = std::array::from_fn(|k| sample(start + k as isize));
    let at = |t: f64| {
        let w = lagrange_weights(t - start as f64);
        nodes.iter().zip(w).fold(M::zero(), |acc, (m, wk)| acc.add(&m.scale(wk)))
    };
    let mid = a as f64 + 0.5;
    let a1 = at(mid - GAUSS3);
    let a2 = at(mid);
    let a3 = at(mid + GAUSS3);
    let alpha1 = a2.scale(h);
    let alpha2 = a3.sub(&a1).scale(15f64.sqrt() * h / 3.0);
    let alpha3 = a3.sub(&a2.scale(2.0)).add(&a1).scale(10.0 * h / 3.0);
    let c1 = alpha1.bracket(&alpha2);
    let c2 = alpha1.bracket(&alpha3.scale(2.0).add(&c1)).scale(-1.0 / 60.0);
    let lhs = alpha1.scale(-20.0).sub(&alpha3).add(&c1);
    let rhs = alpha2.add(&c2);
    alpha1.add(&alpha3.scale(1.0 / 12.0)).add(&lhs.bracket(&rhs).scale(1.0 / 240.0)).exp()
}
