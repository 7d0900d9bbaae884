//! Desk-scale domains in the conformal coordinate `z = x + iy` and scalar fields on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// Simply connected rectangle with boundary nodes on all four edges.
    Patch,
    /// Periodic in `x` with period `lx`; the node `i = nx` is identified with `i = 0`.
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub kind: DomainKind,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Coordinates of node `(0, 0)`.
    pub x0: f64,
    pub y0: f64,
}

impl DomainGrid {
    pub const MIN_NODES: usize = 8;

    /// Cylinder `[0, lx) × [−ly/2, ly/2]`.
    pub fn cylinder(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        DomainGrid { kind: DomainKind::Cylinder, nx, ny, lx, ly, x0: 0.0, y0: -0.5 * ly }.validated()
    }

    /// Rectangle `[x0, x0 + lx] × [y0, y0 + ly]`.
    pub fn patch(nx: usize, ny: usize, x0: f64, y0: f64, lx: f64, ly: f64) -> Result<Self> {
        DomainGrid { kind: DomainKind::Patch, nx, ny, lx, ly, x0, y0 }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.nx < Self::MIN_NODES || self.ny < Self::MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {} nodes per direction, got {}x{}",
                Self::MIN_NODES,
                self.nx,
                self.ny
            )));
        }
        if !(self.lx > 0.0 && self.ly > 0.0) || !self.lx.is_finite() || !self.ly.is_finite() {
            return Err(Error::InvalidArgument("grid lengths must be positive".into()));
        }
        Ok(self)
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == DomainKind::Cylinder
    }

    pub fn hx(&self) -> f64 {
        match self.kind {
            DomainKind::Cylinder => self.lx / self.nx as f64,
            DomainKind::Patch => self.lx / (self.nx - 1) as f64,
        }
    }

    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy()
    }

    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same domain with `nx`, `ny` replaced.
    pub fn resized(&self, nx: usize, ny: usize) -> Result<Self> {
        DomainGrid { nx, ny, ..*self }.validated()
    }
}

/// A field stored row-major: index `j * nx + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<T>,
}

impl<T: Clone> Field<T> {
    pub fn filled(nx: usize, ny: usize, value: T) -> Self {
        Field { nx, ny, data: vec![value; nx * ny] }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i, j));
            }
        }
        Field { nx, ny, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[j * self.nx + i]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[j * self.nx + i]
    }

    /// Reads with `i` taken modulo `nx`.
    #[inline]
    pub fn wrapped(&self, i: usize, j: usize) -> &T {
        &self.data[j * self.nx + i % self.nx]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Field<U> {
        Field { nx: self.nx, ny: self.ny, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<U, V>(&self, other: &Field<U>, f: impl Fn(&T, &U) -> V) -> Field<V> {
        assert_eq!((self.nx, self.ny), (other.nx, other.ny));
        Field {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.nx..(j + 1) * self.nx]
    }
}

impl Field<f64> {
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_complex(&self) -> Field<Complex64> {
        self.map(|&v| Complex64::new(v, 0.0))
    }
}

impl Field<Complex64> {
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn re(&self) -> Field<f64> {
        self.map(|v| v.re)
    }
}

/// Nodes at which a centered stencil of half-width `margin` fits.
pub fn interior(grid: &DomainGrid, margin: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (ilo, ihi) = if grid.is_periodic() { (0, grid.nx) } else { (margin, grid.nx.saturating_sub(margin)) };
    let (jlo, jhi) = (margin, grid.ny.saturating_sub(margin));
    (jlo..jhi).flat_map(move |j| (ilo..ihi).map(move |i| (i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings() {
        let c = DomainGrid::cylinder(16, 9, 2.0, 1.0).unwrap();
        assert_eq!(c.hx(), 0.125);
        assert_eq!(c.hy(), 0.125);
        assert_eq!(c.y(0), -0.5);
        assert_eq!(c.y(8), 0.5);
        let p = DomainGrid::patch(9, 9, -0.5, -0.5, 1.0, 1.0).unwrap();
        assert_eq!(p.hx(), 0.125);
        assert_eq!(p.x(8), 0.5);
    }

    #[test]
    fn rejects_small_or_empty() {
        assert!(DomainGrid::cylinder(7, 16, 1.0, 1.0).is_err());
        assert!(DomainGrid::cylinder(16, 16, 0.0, 1.0).is_err());
        assert!(DomainGrid::patch(16, 16, 0.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn interior_counts() {
        let c = DomainGrid::cylinder(16, 12, 2.0, 1.0).unwrap();
        assert_eq!(interior(&c, 2).count(), 16 * 8);
        let p = DomainGrid::patch(10, 12, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(interior(&p, 1).count(), 8 * 10);
    }
}
