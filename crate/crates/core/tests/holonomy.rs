use std::f64::consts::PI;

use landslide_core::algebra::{basis, c, mat2, moebius_apply, moebius_fit, psl_distance, CP1Point, MoebiusMap, SL2C};
use landslide_core::frame::{build_connection, integrate_frame, integrate_frame_with, ConnectionForm, FrameOptions};
use landslide_core::gauss::{solve_profile_ode, MetricData};
use landslide_core::grid::DomainGrid;
use landslide_core::holonomy::*;
use landslide_core::surface::gauss_maps;
use landslide_core::Error;
use num_complex::Complex64;

fn fixture(n: usize) -> MetricData {
    let g = DomainGrid::cylinder(n, n, 1.5, 1.5).unwrap();
    solve_profile_ode(2.0, c(1.0, 0.0), 0.5, &g).unwrap()
}

fn sl2(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> SL2C {
    SL2C::normalize(mat2(a, b, cc, d)).unwrap()
}

#[test]
fn identity_frame_develops_to_infinity() {
    let g = DomainGrid::cylinder(8, 8, 1.0, 1.0).unwrap();
    let f = integrate_frame(&ConnectionForm::zero(&g), c(0.5, 0.0), (0, 0)).unwrap();
    // A constant developing map is not locally injective.
    assert!(matches!(developing_map(&f), Err(Error::DegenerateConfiguration(_))));
    for p in &f.frames.data {
        let m = p.matrix();
        let pt = CP1Point::new(m[(0, 0)], m[(1, 0)]).unwrap();
        assert!(pt.chordal(&CP1Point::infinity()) < 1e-15);
    }
}

#[test]
fn developing_map_is_the_forward_gauss_map() {
    let m = fixture(32);
    let f = integrate_frame(&build_connection(&m), c(0.25, 0.1), (0, 16)).unwrap();
    let dev = developing_map(&f).unwrap();
    let (_, lines) = gauss_maps(&f).unwrap();
    for (d, l) in dev.points.data.iter().zip(&lines.data) {
        assert!(d.chordal(&l.plus) < 1e-13);
    }
    assert!(dev.min_adjacent_separation() > LOCAL_INJECTIVITY);
    assert!(matches!(developing_map(&integrate_frame(&build_connection(&m), c(0.0, 1.0), (0, 16)).unwrap()), Err(Error::SpectralOnCircle(_))));
}

#[test]
fn frame_developing_map_is_equivariant() {
    let m = fixture(64);
    let conn = build_connection(&m);
    let q = c(-0.1, 0.12);
    let mu = sqrt_q(q).unwrap();
    let opts = FrameOptions { extra_columns: 64, ..FrameOptions::default() };
    let f = integrate_frame_with(&conn, mu, (0, 32), opts).unwrap();
    let dev = developing_map(&f).unwrap();
    let rec = frame_holonomy_at_sqrt_q(&conn, q, 32).unwrap();
    assert!(dev.equivariance_residual(&rec.moebius).unwrap() < 1e-8);
    assert!(dev.equivariance_residual(&MoebiusMap::identity()).unwrap() > 1e-3);
    let fitted = dev_holonomy(&dev, q).unwrap();
    assert!(compare_holonomy(&rec, &fitted) < 1e-8);
}

#[test]
fn moebius_fit_recovers_a_map() {
    let h = sl2(c(1.2, 0.3), c(-0.4, 0.9), c(0.5, -0.2), c(0.7, 0.1));
    let src: Vec<CP1Point> = (0..40)
        .map(|k| {
            let t = k as f64 * 0.37;
            CP1Point::from_affine(Complex64::from_polar(0.2 + 0.05 * k as f64, t))
        })
        .collect();
    let pairs: Vec<_> = src.iter().map(|p| (*p, moebius_apply(&MoebiusMap(h), p))).collect();
    let fit = moebius_fit(&pairs).unwrap();
    assert!(psl_distance(fit.matrix(), h.matrix()) < 1e-10);
    let exact = moebius_fit(&pairs[..3]).unwrap();
    assert!(psl_distance(exact.matrix(), h.matrix()) < 1e-10);
    let same = vec![(src[0], src[1]); 5];
    assert!(moebius_fit(&same).is_err());
}

#[test]
fn sign_of_the_representative_is_irrelevant() {
    let m = fixture(32);
    let conn = build_connection(&m);
    let q = c(0.05, -0.2);
    let rec = frame_holonomy_at_sqrt_q(&conn, q, 16).unwrap();
    let neg = rec.negated();
    assert!(psl_distance(rec.moebius.matrix(), neg.moebius.matrix()) < 1e-15);
    assert!(compare_holonomy(&rec, &neg) < 1e-15);
    assert!(rec.det_error() < 1e-12);
    // −μ conjugates the form by diag(1, −1), so the class is unchanged.
    let mu = sqrt_q(q).unwrap();
    let other = landslide_core::frame::loop_holonomy(&conn, -mu, landslide_core::frame::LoopSpec::XPeriod { row: 16 }).unwrap();
    let d = mat2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
    assert!(psl_distance(other.matrix(), &(d * rec.matrix.matrix() * d)) < 1e-10);
    assert!(compare_holonomy(&rec, &HolonomyRecord::new(X_GENERATOR, other, -mu, q)) < 1e-10);
}

#[test]
fn unit_circle_holonomy_is_real() {
    let m = fixture(64);
    let conn = build_connection(&m);
    let e1 = basis()[1];
    for phi in [0.0, 1.0, 2.5] {
        let rec = frame_holonomy_at_sqrt_q(&conn, Complex64::from_polar(1.0, phi), 32).unwrap();
        let h = rec.matrix.matrix();
        assert!((h.adjoint() * e1 * h - e1).norm() < 1e-8);
    }
}

#[test]
fn comparison_is_conjugation_invariant() {
    let r = sl2(c(0.9, 0.4), c(1.1, -0.3), c(-0.2, 0.6), c(1.3, 0.2));
    let g = sl2(c(2.0, 0.1), c(0.3, 0.3), c(-0.7, 0.2), c(0.4, -0.5));
    let conj = SL2C::normalize(g.matrix() * r.matrix() * g.inverse().matrix()).unwrap();
    let a = HolonomyRecord::new(X_GENERATOR, r, c(0.5, 0.0), c(0.25, 0.0));
    let b = HolonomyRecord::new(X_GENERATOR, conj, c(0.5, 0.0), c(0.25, 0.0));
    assert!(compare_holonomy(&a, &b) < 1e-12);
    assert!(compare_holonomy(&a, &b.negated()) < 1e-12);
    let other = HolonomyRecord::new(X_GENERATOR, g, c(0.5, 0.0), c(0.25, 0.0));
    assert!(compare_holonomy(&a, &other) > 1e-2);
}

#[test]
fn sqrt_q_domain_and_parameters() {
    let q = c((-2f64).exp(), 0.0);
    let mu = sqrt_q(q).unwrap();
    assert!((mu - c((-1f64).exp(), 0.0)).norm() < 1e-16);
    assert!(sqrt_q(c(0.0, 0.0)).is_err());
    assert!(sqrt_q(c(1.1, 0.0)).is_err());
    let m = fixture(32);
    let st = complex_landslide(&m, &build_connection(&m), q, None).unwrap();
    assert!((st.s - 2.0).abs() < 1e-15);
    assert!(st.theta.abs() < 1e-15);
    let on_circle = complex_landslide(&m, &build_connection(&m), Complex64::from_polar(1.0, 0.4), None).unwrap();
    assert!(on_circle.dev_record.is_none() && on_circle.compare_residual.is_none());
}

#[test]
fn landslide_holonomy_matches_frame_holonomy() {
    let m = fixture(128);
    let conn = build_connection(&m);
    for q in [c((-2f64).exp(), 0.0), Complex64::from_polar((-2f64).exp(), PI / 2.0), Complex64::from_polar((-1.5f64).exp(), -2.0)] {
        let st = complex_landslide(&m, &conn, q, None).unwrap();
        let r = st.compare_residual.unwrap();
        assert!(r < 1e-6, "q {q}: {r:e}");
        let dev = st.developing_map.as_ref().unwrap();
        assert!(dev.equivariance_residual(&st.dev_record.as_ref().unwrap().moebius).unwrap() < 1e-8);
    }
}

#[test]
fn trace_is_holomorphic_in_q() {
    let m = fixture(64);
    let conn = build_connection(&m);
    let center = Complex64::from_polar((-2f64).exp(), PI / 2.0);
    let rep = holomorphy_scan(&conn, center, 1e-3, 5, 32).unwrap();
    assert!(rep.cr_residual < 1e-5, "{rep:?}");
    assert!(rep.control_residual > 1e-2, "{rep:?}");
    assert!(holomorphy_scan(&conn, center, 1e-3, 2, 32).is_err());
}

#[test]
fn cauchy_riemann_of_samples() {
    let n = 5;
    let d = 0.01;
    let sample = |f: &dyn Fn(Complex64) -> Complex64| -> Vec<Complex64> {
        (0..n * n).map(|p| f(c((p % n) as f64 * d, (p / n) as f64 * d))).collect()
    };
    let (dbar, dq) = cr_residuals(&sample(&|_| c(2.0, -1.0)), n, d);
    assert_eq!((dbar, dq), (0.0, 0.0));
    let (dbar, dq) = cr_residuals(&sample(&|z| z * z * z), n, d);
    assert!(dbar < 1e-12 && (dq - 3.0 * (c(0.02, 0.02) * c(0.02, 0.02)).norm()).abs() < 1e-12);
    let (dbar, _) = cr_residuals(&sample(&|z| z.conj()), n, d);
    assert!((dbar - 1.0).abs() < 1e-12);
}
