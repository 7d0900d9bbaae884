use std::f64::consts::PI;

use landslide_core::algebra::{basis, c, exp_mat2, mat2, Mat2C, SL2C};
use landslide_core::frame::{
    build_connection, flatness_residual, gauge_d, integrate_frame, integrate_frame_with, loop_holonomy, loop_holonomy_unchecked,
    untwist_connection, untwist_frame, ConnectionForm, FrameOptions, LoopSpec, Sweep,
};
use landslide_core::gauss::{solve_profile_ode, MetricData};
use landslide_core::grid::{DomainGrid, Field};
use landslide_core::Error;
use num_complex::Complex64;

fn fixture(n: usize) -> MetricData {
    let g = DomainGrid::cylinder(n, n, 1.5, 1.5).unwrap();
    solve_profile_ode(2.0, c(1.0, 0.0), 0.5, &g).unwrap()
}

fn sample_lambdas() -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..8).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0 + 0.1)).collect();
    v.extend((0..8).map(|k| Complex64::from_polar(0.15 + 0.1 * k as f64, 0.7 * k as f64 - 2.0)));
    v
}

#[test]
fn flat_for_all_sampled_lambdas() {
    let m = fixture(128);
    let conn = build_connection(&m);
    for l in sample_lambdas() {
        let r = flatness_residual(&conn, l);
        assert!(r < 1e-8, "λ = {l}: {r:e}");
    }
    assert!(flatness_residual(&conn, Complex64::from_polar(0.3, 1.0)) < 1e-8);
}

#[test]
fn perturbed_profile_is_not_flat() {
    let mut m = fixture(128);
    let g = m.grid;
    m.u = Field::from_fn(g.nx, g.ny, |i, j| m.u.get(i, j) + 0.01 * (2.0 * PI * g.y(j) / g.ly).sin());
    let conn = build_connection(&m);
    let r = flatness_residual(&conn, c(1.0, 0.0));
    assert!(r > 1e-4, "{r:e}");
    assert!(matches!(integrate_frame(&conn, c(1.0, 0.0), (0, 64)), Err(Error::FlatnessTooLarge { .. })));
}

#[test]
fn structural_invariants() {
    let conn = build_connection(&fixture(32));
    assert!(conn.trace_defect() < 1e-12);
    assert_eq!(conn.twist_defect(), 0.0);
    for k in 0..5 {
        assert!(conn.reality_defect(Complex64::from_polar(1.0, k as f64)) < 1e-12);
    }
    // α^{−λ} = τ α^λ τ⁻¹ with τ = Ad e₁.
    let e1 = basis()[1];
    let l = c(0.3, 0.5);
    for (i, j) in [(0, 0), (5, 17), (31, 31)] {
        let (x1, y1) = conn.axis_parts(i, j, l);
        let (x2, y2) = conn.axis_parts(i, j, -l);
        assert!((e1 * x1 * e1 - x2).norm() < 1e-15);
        assert!((e1 * y1 * e1 - y2).norm() < 1e-15);
    }
}

#[test]
fn constant_data_gives_constant_coefficients() {
    let g = DomainGrid::cylinder(16, 16, 1.0, 1.0).unwrap();
    let m = MetricData::new(g, Field::filled(16, 16, 0.3), Field::filled(16, 16, c(2.0, 1.0)), 1.0).unwrap();
    let conn = build_connection(&m);
    for f in conn.a.iter().chain(&conn.b) {
        assert!(f.data.iter().all(|x| (x - f.data[0]).norm() < 1e-14));
    }
}

#[test]
fn zero_connection_gives_identity() {
    let g = DomainGrid::patch(12, 10, 0.0, 0.0, 1.0, 1.0).unwrap();
    let f = integrate_frame(&ConnectionForm::zero(&g), c(0.5, 0.0), (3, 4)).unwrap();
    assert!(f.frames.data.iter().all(|m| *m == SL2C::identity()));
}

#[test]
fn constant_row_matches_exponential() {
    let g = DomainGrid::patch(20, 10, 0.0, 0.0, 2.0, 1.0).unwrap();
    let a = mat2(c(0.3, 0.1), c(0.7, -0.2), c(-0.4, 0.5), c(-0.3, -0.1));
    let o = Mat2C::zeros();
    let conn = ConnectionForm::constant(&g, [o, a, o], [o, o, o]);
    let f = integrate_frame(&conn, c(1.0, 0.0), (0, 0)).unwrap();
    for i in 0..g.nx {
        let want = exp_mat2(&a.map(|v| v * g.x(i)));
        assert!((f.get(i, 0).matrix() - want).norm() < 1e-10);
    }
}

#[test]
fn unit_circle_frames_are_real() {
    let conn = build_connection(&fixture(64));
    let f = integrate_frame(&conn, Complex64::from_polar(1.0, 0.8), (10, 32)).unwrap();
    assert!(f.reality_error() < 1e-8);
    assert!(f.max_det_error() < 1e-10);
}

#[test]
fn sweeps_agree() {
    let conn = build_connection(&fixture(64));
    let l = c(0.2, 0.3);
    let f1 = integrate_frame(&conn, l, (5, 20)).unwrap();
    let opts = FrameOptions { sweep: Sweep::RowFirst, ..Default::default() };
    let f2 = integrate_frame_with(&conn, l, (5, 20), opts).unwrap();
    let worst = f1.frames.data.iter().zip(&f2.frames.data).map(|(a, b)| (a.matrix() - b.matrix()).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst:e}");
}

#[test]
fn holonomy_matches_exponential_oracle() {
    let m = fixture(128);
    let conn = build_connection(&m);
    let l = Complex64::from_polar((-1f64).exp(), 0.6);
    for row in [10, 64, 100] {
        let h = loop_holonomy(&conn, l, LoopSpec::XPeriod { row }).unwrap();
        let (ax, _) = conn.axis_parts(0, row, l);
        let want = exp_mat2(&ax.map(|v| v * m.grid.lx));
        assert!((h.matrix() - want).norm() < 1e-9);
    }
}

#[test]
fn holonomy_trace_independent_of_row() {
    let conn = build_connection(&fixture(128));
    let l = c(0.25, -0.1);
    let t0 = loop_holonomy(&conn, l, LoopSpec::XPeriod { row: 64 }).unwrap().trace();
    for row in [8, 30, 90, 119] {
        let t = loop_holonomy(&conn, l, LoopSpec::XPeriod { row }).unwrap().trace();
        assert!((t - t0).norm() < 1e-8, "row {row}: {:e}", (t - t0).norm());
    }
}

#[test]
fn contractible_loops() {
    let conn = build_connection(&fixture(128));
    let l = c(0.4, 0.2);
    let h = loop_holonomy(&conn, l, LoopSpec::Rectangle { i0: 3, j0: 40, i1: 3, j1: 40 }).unwrap();
    assert!((h.matrix() - Mat2C::identity()).norm() < 1e-15);
    let h = loop_holonomy(&conn, l, LoopSpec::Rectangle { i0: 3, j0: 30, i1: 60, j1: 90 }).unwrap();
    assert!((h.matrix() - Mat2C::identity()).norm() < 1e-8);
}

#[test]
fn frame_is_equivariant_on_cover() {
    let conn = build_connection(&fixture(128));
    let l = c(0.3, 0.1);
    let opts = FrameOptions { extra_columns: 128, ..Default::default() };
    let f = integrate_frame_with(&conn, l, (0, 64), opts).unwrap();
    let h = loop_holonomy(&conn, l, LoopSpec::XPeriod { row: 64 }).unwrap();
    for j in [0, 20, 64, 127] {
        for i in [0, 17, 90] {
            let want = h.matrix() * f.get(i, j).matrix();
            let e = (f.get(i + 128, j).matrix() - want).norm();
            assert!(e < 1e-8, "({i},{j}) {e:e}");
        }
    }
}

#[test]
fn untwisted_gauge_identities() {
    let g = DomainGrid::cylinder(32, 16, 1.0, 1.0).unwrap();
    let m = MetricData::new(g, Field::filled(32, 16, 0.4), Field::filled(32, 16, c(0.5, 0.5)), 1.5).unwrap();
    let conn = build_connection(&m);
    let hat = untwist_connection(&conn);
    let mu = c(0.3, 0.4);
    for (i, j) in [(0, 0), (7, 9)] {
        let d = gauge_d(mu);
        let dinv = d.try_inverse().unwrap();
        assert!((hat.dz_part(i, j, mu * mu) - dinv * conn.dz_part(i, j, mu) * d).norm() < 1e-12);
        assert!((hat.dzbar_part(i, j, mu * mu) - dinv * conn.dzbar_part(i, j, mu) * d).norm() < 1e-12);
        assert!((hat.dz_part(i, j, c(1.0, 0.0)) - conn.dz_part(i, j, c(1.0, 0.0))).norm() < 1e-15);
    }
    let h = loop_holonomy_unchecked(&conn, mu, LoopSpec::XPeriod { row: 3 }).unwrap();
    let hh = loop_holonomy_unchecked(&hat, mu * mu, LoopSpec::XPeriod { row: 3 }).unwrap();
    let d = gauge_d(mu);
    assert!((hh.matrix() - d.try_inverse().unwrap() * h.matrix() * d).norm() < 1e-10);

    let f = integrate_frame_with(&conn, mu, (2, 5), unchecked()).unwrap();
    let fh = untwist_frame(&f).unwrap();
    let direct = integrate_frame_with(&hat, mu * mu, (2, 5), unchecked()).unwrap();
    for (a, b) in fh.frame.frames.data.iter().zip(&direct.frames.data) {
        assert!((a.matrix() - b.matrix()).norm() < 1e-9);
    }
    // Single-valued in λ: μ and −μ give the same untwisted frame.
    let fm = untwist_frame(&integrate_frame_with(&conn, -mu, (2, 5), unchecked()).unwrap()).unwrap();
    for (a, b) in fh.frame.frames.data.iter().zip(&fm.frame.frames.data) {
        assert!((a.matrix() - b.matrix()).norm() < 1e-8);
    }
    let one = untwist_frame(&integrate_frame_with(&conn, c(1.0, 0.0), (2, 5), unchecked()).unwrap()).unwrap();
    let plain = integrate_frame_with(&conn, c(1.0, 0.0), (2, 5), unchecked()).unwrap();
    assert_eq!(one.frame.frames.data, plain.frames.data);
}

fn unchecked() -> FrameOptions {
    FrameOptions { flatness_limit: None, ..Default::default() }
}
