//! Adaptive Dormand–Prince 5(4) integrator for small autonomous-or-not real systems.
//!
//! The integrator lands exactly on every requested output abscissa, so dense output is
//! never interpolated.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-14, atol: 1e-14, max_steps: 1_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const BHAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at each entry of
    /// `t_out`, which must be monotone in one direction away from `t0`.
    ///
    /// Fails with [`Error::ProfileBlowUp`] carrying the last reached abscissa if the step
    /// size collapses or the state stops being finite.
    pub fn solve<F>(&self, f: F, t0: f64, y0: &[f64], t_out: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut out = Vec::with_capacity(t_out.len());
        let span = t_out.last().map_or(0.0, |&e| (e - t0).abs());
        let mut h = (span * 1e-3).max(1e-6);
        let mut steps = 0;
        f(t, &y, &mut k[0]);
        for &target in t_out {
            let dir = if target >= t { 1.0 } else { -1.0 };
            while (target - t).abs() > 1e-15 * (1.0 + t.abs()) {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::NoConvergence { iterations: steps, residual: h });
                }
                let last = h >= (target - t).abs();
                let step = if last { target - t } else { dir * h };
                for s in 1..7 {
                    for i in 0..n {
                        tmp[i] = y[i] + step * (0..s).map(|r| A[s][r] * k[r][i]).sum::<f64>();
                    }
                    f(t + C[s] * step, &tmp, &mut k[s]);
                }
                let mut err: f64 = 0.0;
                let mut y_new = vec![0.0; n];
                for i in 0..n {
                    let mut hi = 0.0;
                    let mut lo = 0.0;
                    for s in 0..7 {
                        hi += B[s] * k[s][i];
                        lo += BHAT[s] * k[s][i];
                    }
                    y_new[i] = y[i] + step * hi;
                    let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                    err = err.max((step * (hi - lo) / sc).abs());
                }
                if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                    h *= 0.25;
                } else if err <= 1.0 {
                    t = if last { target } else { t + step };
                    y = y_new;
                    // FSAL: stage 7 is f at the new point.
                    k.swap(0, 6);
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !last {
                        h *= grow;
                    } else {
                        h = h.max(step.abs() * grow);
                    }
                } else {
                    h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                }
                if h < 1e-12 * (1.0 + t.abs()) {
                    return Err(Error::ProfileBlowUp(t));
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ts: Vec<f64> = (1..=10).map(|k| k as f64 * 0.3).collect();
        let ys = Dopri5::default().solve(|_, y, d| d[0] = -y[0], 0.0, &[1.0], &ts).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let ts = [-1.0, -2.5];
        let ys = Dopri5::default()
            .solve(|_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
            }, 0.0, &[0.0, 1.0], &ts)
            .unwrap();
        assert!((ys[1][0] - (-2.5f64).sin()).abs() < 1e-12);
        assert!((ys[1][1] - (-2.5f64).cos()).abs() < 1e-12);
    }

    #[test]
    fn blow_up_detected() {
        // y' = y², y(0) = 1 blows up at t = 1.
        let r = Dopri5::default().solve(|_, y, d| d[0] = y[0] * y[0], 0.0, &[1.0], &[2.0]);
        match r {
            Err(Error::ProfileBlowUp(t)) => assert!(t < 1.0 && t > 0.99),
            other => panic!("{other:?}"),
        }
    }
}
