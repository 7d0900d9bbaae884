use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cp1::CP1Point;
use super::matrix::{c, exp_mat2, mat2, Mat2C, SL2C};
use crate::error::{Error, Result};

/// A Möbius map of ℂP¹ with a unit-determinant representative (defined up to sign).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap(pub SL2C);

impl MoebiusMap {
    pub fn identity() -> Self {
        MoebiusMap(SL2C::identity())
    }

    pub fn matrix(&self) -> &Mat2C {
        self.0.matrix()
    }

    pub fn inverse(&self) -> Self {
        MoebiusMap(self.0.inverse())
    }
}

impl Serialize for MoebiusMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.matrix();
        [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]].serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoebiusMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let e = <[Complex64; 4]>::deserialize(d)?;
        SL2C::normalize(mat2(e[0], e[1], e[2], e[3]))
            .map(MoebiusMap)
            .map_err(serde::de::Error::custom)
    }
}

pub fn moebius_apply(m: &MoebiusMap, p: &CP1Point) -> CP1Point {
    p.apply(m.matrix()).expect("invertible map sends points to points")
}

/// `min(‖a − b‖, ‖a + b‖)` in the Frobenius norm: distance in PSL(2, ℂ).
pub fn psl_distance(a: &Mat2C, b: &Mat2C) -> f64 {
    (a - b).norm().min((a + b).norm())
}

const MIN_SEPARATION: f64 = 1e-6;

/// Least-squares Möbius map sending each source point to its target.
///
/// Seeds with the exact map through the three most separated source points, then refines
/// all pairs by damped Gauss–Newton on the chordal residuals in the Lie algebra.
pub fn moebius_fit(pairs: &[(CP1Point, CP1Point)]) -> Result<MoebiusMap> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least 3 point pairs, got {}",
            pairs.len()
        )));
    }
    let (i, j, k) = spread_triple(pairs)?;
    let src = frame_through(&pairs[i].0, &pairs[j].0, &pairs[k].0)?;
    let dst = frame_through(&pairs[i].1, &pairs[j].1, &pairs[k].1)?;
    let inv = src
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("source triple is collinear".into()))?;
    let seed = SL2C::normalize(dst * inv)?;
    if pairs.len() == 3 {
        return Ok(MoebiusMap(seed));
    }
    Ok(MoebiusMap(refine(seed, pairs)))
}

/// Chooses three source indices greedily maximizing the minimum pairwise chordal distance.
fn spread_triple(pairs: &[(CP1Point, CP1Point)]) -> Result<(usize, usize, usize)> {
    let d = |a: usize, b: usize| pairs[a].0.chordal(&pairs[b].0);
    let i = 0;
    let j = (0..pairs.len()).max_by(|&a, &b| d(i, a).total_cmp(&d(i, b))).unwrap();
    let k = (0..pairs.len())
        .max_by(|&a, &b| d(i, a).min(d(j, a)).total_cmp(&d(i, b).min(d(j, b))))
        .unwrap();
    let sep = d(i, j).min(d(i, k)).min(d(j, k));
    if sep < MIN_SEPARATION {
        return Err(Error::DegenerateConfiguration(format!(
            "source points nearly coincide (separation {sep:e})"
        )));
    }
    Ok((i, j, k))
}

/// Matrix sending `[1:0], [0:1], [1:1]` to `p1, p2, p3`.
fn frame_through(p1: &CP1Point, p2: &CP1Point, p3: &CP1Point) -> Result<Mat2C> {
    let (a, b, t) = (p1.coords(), p2.coords(), p3.coords());
    // solve x·a + y·b = t
    let det = a[0] * b[1] - a[1] * b[0];
    if det.norm() < 1e-14 {
        return Err(Error::DegenerateConfiguration("coincident points".into()));
    }
    let x = (t[0] * b[1] - t[1] * b[0]) / det;
    let y = (a[0] * t[1] - a[1] * t[0]) / det;
    Ok(mat2(a[0] * x, b[0] * y, a[1] * x, b[1] * y))
}

fn generators() -> [Mat2C; 6] {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        mat2(one, o, o, -one),
        mat2(i, o, o, -i),
        mat2(o, one, o, o),
        mat2(o, i, o, o),
        mat2(o, o, one, o),
        mat2(o, o, i, o),
    ]
}

fn residuals(m: &Mat2C, pairs: &[(CP1Point, CP1Point)], out: &mut Vec<f64>) {
    out.clear();
    for (s, d) in pairs {
        let s = s.coords();
        let d = d.coords();
        let w0 = m[(0, 0)] * s[0] + m[(0, 1)] * s[1];
        let w1 = m[(1, 0)] * s[0] + m[(1, 1)] * s[1];
        let n = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
        let r = (w0 * d[1] - w1 * d[0]) / n;
        out.push(r.re);
        out.push(r.im);
    }
}

fn step(m: &Mat2C, delta: &[f64; 6]) -> Mat2C {
    let g = generators();
    let x = (0..6).fold(Mat2C::zeros(), |acc, k| acc + g[k].map(|v| v * delta[k]));
    m * exp_mat2(&x)
}

fn refine(seed: SL2C, pairs: &[(CP1Point, CP1Point)]) -> SL2C {
    let mut m = *seed.matrix();
    let mut r = Vec::new();
    let mut rp = Vec::new();
    let mut rm = Vec::new();
    residuals(&m, pairs, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut damping = 1e-6;
    let h = 1e-6;
    for _ in 0..50 {
        if cost < 1e-30 {
            break;
        }
        let n = r.len();
        let mut jac = vec![[0.0; 6]; n];
        for k in 0..6 {
            let mut e = [0.0; 6];
            e[k] = h;
            residuals(&step(&m, &e), pairs, &mut rp);
            e[k] = -h;
            residuals(&step(&m, &e), pairs, &mut rm);
            for row in 0..n {
                jac[row][k] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let mut jtj = SMatrix::<f64, 6, 6>::zeros();
        let mut jtr = SVector::<f64, 6>::zeros();
        for row in 0..n {
            for a in 0..6 {
                jtr[a] += jac[row][a] * r[row];
                for b in 0..6 {
                    jtj[(a, b)] += jac[row][a] * jac[row][b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..10 {
            let mut lhs = jtj;
            for a in 0..6 {
                lhs[(a, a)] += damping * (1.0 + jtj[(a, a)]);
            }
            let Some(sol) = lhs.lu().solve(&(-jtr)) else { break };
            let delta = [sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]];
            let cand = step(&m, &delta);
            residuals(&cand, pairs, &mut rp);
            let cand_cost: f64 = rp.iter().map(|v| v * v).sum();
            if cand_cost < cost {
                let gain = cost - cand_cost;
                m = cand;
                std::mem::swap(&mut r, &mut rp);
                cost = cand_cost;
                damping = (damping * 0.3).max(1e-12);
                improved = gain > 1e-32;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    SL2C::normalize(m).unwrap_or(seed)
}
