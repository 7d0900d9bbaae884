use landslide_core::diff::Differ;
use landslide_core::gauss::{
    gauss_residual, profile_first_integral, residual_sup, solve_patch, solve_profile_ode, MetricData, PatchOptions,
    QPolynomial,
};
use landslide_core::grid::{DomainGrid, Field};
use landslide_core::Error;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fixture_grid(n: usize) -> DomainGrid {
    DomainGrid::cylinder(n, n, 1.5, 1.5).unwrap()
}

#[test]
fn profile_residual_below_solver_tolerance() {
    let m = solve_profile_ode(2.0, c(1.0, 0.0), 0.5, &fixture_grid(128)).unwrap();
    assert!(m.is_nondegenerate());
    let r = residual_sup(&m);
    assert!(r < 1e-9, "residual {r:e}");
}

#[test]
fn profile_conserves_first_integral() {
    let m = solve_profile_ode(2.0, c(1.0, 0.0), 0.5, &fixture_grid(128)).unwrap();
    let k = m.curvature();
    let du = Differ::new(&m.grid).dy(&m.u.to_complex());
    let e0 = profile_first_integral(k, 1.0, 0.5, 0.0);
    // Derivatives from 9-point stencils: compare on the interior rows.
    for j in 4..m.grid.ny - 4 {
        let e = profile_first_integral(k, 1.0, *m.u.get(0, j), du.get(0, j).re);
        assert!((e - e0).abs() < 1e-10, "row {j}: {:e}", e - e0);
    }
}

#[test]
fn profile_is_even_and_increasing_away_from_axis() {
    let m = solve_profile_ode(2.0, c(0.0, 1.0), 0.5, &fixture_grid(32)).unwrap();
    let ny = m.grid.ny;
    for j in 0..ny / 2 {
        assert_eq!(m.u.get(3, j), m.u.get(3, ny - 1 - j));
        if j + 1 < ny / 2 {
            assert!(m.u.get(0, j) > m.u.get(0, j + 1));
        }
    }
}

#[test]
fn liouville_second_order() {
    let s = 2.0;
    let k = -1.0 / (0.5f64 * s).cosh().powi(2);
    let exact = |z: Complex64| (4.0 / (k.abs() * (1.0 - z.norm_sqr()).powi(2))).ln();
    let err = |n: usize| {
        let g = DomainGrid::patch(n, n, -0.4, -0.4, 0.8, 0.8).unwrap();
        let bnd = Field::from_fn(n, n, |i, j| exact(g.z(i, j)));
        let m = solve_patch(&QPolynomial::constant(c(0.0, 0.0)), s, &g, &bnd, PatchOptions::default()).unwrap();
        assert!(residual_sup(&m) < 1e-9);
        (0..n * n).map(|p| (m.u.data[p] - exact(g.z(p % n, p / n))).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(33), err(65));
    let ratio = e1 / e2;
    assert!(e1 < 1e-3, "{e1:e}");
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn constant_klotz_equilibrium_is_flagged() {
    let g = DomainGrid::patch(16, 16, 0.0, 0.0, 1.0, 1.0).unwrap();
    let q = c(0.6, 0.8) * 2.0;
    let bnd = Field::filled(16, 16, 2f64.ln());
    match solve_patch(&QPolynomial::constant(q), 2.0, &g, &bnd, PatchOptions::default()) {
        Err(Error::DegenerateSolution { nodes, data }) => {
            assert_eq!(nodes, 256);
            assert!(data.u.data.iter().all(|&u| (u - 2f64.ln()).abs() < 1e-12));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn linear_klotz_patch_converges() {
    let g = DomainGrid::patch(64, 64, -0.5, -0.5, 1.0, 1.0).unwrap();
    let bnd = Field::filled(64, 64, 1.0);
    let q = QPolynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    let m = solve_patch(&q, 2.0, &g, &bnd, PatchOptions::default()).unwrap();
    assert!(m.is_nondegenerate());
    assert!(gauss_residual(&m).sup_norm() < 1e-9);
}

#[test]
fn newton_reports_non_convergence() {
    let g = DomainGrid::patch(16, 16, -0.5, -0.5, 1.0, 1.0).unwrap();
    let bnd = Field::filled(16, 16, 1.0);
    let opts = PatchOptions { max_newton: 0, ..PatchOptions::default() };
    let r = solve_patch(&QPolynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]), 2.0, &g, &bnd, opts);
    assert!(matches!(r, Err(Error::NoConvergence { iterations: 0, .. })));
}

#[test]
fn curvature_from_s() {
    let m = solve_profile_ode(2.0, c(1.0, 0.0), 0.5, &fixture_grid(16)).unwrap();
    assert!((m.curvature() + 1.0 / 1f64.cosh().powi(2)).abs() < 1e-15);
    let _ = MetricData::s_from_curvature(m.curvature()).unwrap();
}
