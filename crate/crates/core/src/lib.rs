//! Constant Gaussian curvature (−1 < K < 0) surfaces in hyperbolic 3-space built
//! from harmonic-map data by spectral deformation, together with the landslide
//! flow on pairs of hyperbolic metrics and the holonomy of the resulting
//! complex projective structures.
//!
//! The crate is organised bottom-up:
//!
//! - [`algebra`]: Hermitian model of Minkowski space, ℍ³, geodesics, Möbius maps.
//! - [`grid`] and [`diff`]: desk-scale domains and the discrete derivatives used on them.
//! - [`gauss`]: solutions `(u, Q)` of the structure equations.
//! - [`frame`]: the λ-family of flat connections, extended frames and loop holonomy.
//! - [`surface`]: immersions `f = F F*`, fundamental forms, congruence.
//! - [`landslide`]: metric pairs, Labourie operators and the landslide action.
//! - [`holonomy`]: developing maps and the complex landslide pipeline.
//! - [`config`], [`report`], [`cli`]: the batch front end.

// `!(x < tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod config;
pub mod diff;
pub mod error;
pub mod frame;
pub mod gauss;
pub mod grid;
pub mod holonomy;
pub mod landslide;
pub mod magnus;
pub mod ode;
pub mod report;
pub mod surface;

pub use error::{Error, Result};
