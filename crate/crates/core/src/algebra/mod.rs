//! Exact linear-algebra substrate: the Hermitian model of Minkowski space
//! 𝔼^{1,3}, hyperbolic 3-space, its unit tangent bundle, oriented geodesics
//! and Möbius maps of the boundary sphere ℂP¹.

mod cp1;
mod matrix;
mod minkowski;
mod moebius;

pub use cp1::{geodesic_endpoints, CP1Point, GeodesicLine};
pub use matrix::{basis, c, exp_mat2, mat2, Mat2C, SL2C};
pub use minkowski::{
    frame_of_unit_tangent, minkowski_inner, project_to_h3, to_poincare_ball, unit_tangent_of_frame,
    H3Point, HermitianVec, UnitTangent,
};
pub use moebius::{moebius_apply, moebius_fit, psl_distance, MoebiusMap};
