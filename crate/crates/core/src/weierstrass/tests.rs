use std::f64::consts::{PI, SQRT_2};

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dirac::{apply_dirac, random_band_limited};
use crate::error::Error;
use crate::geometry::{Lattice, SpinStructure};
use crate::nonlinear::{solve_critical, ContinuationSchedule, Solution};
use crate::spinor::SpinorField;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cylinder(y: f64, n: usize) -> Solution {
    let lat = Lattice::new([1.0, 0.0], [0.0, y]).unwrap();
    let spin = SpinStructure::from_signs(1, -1).unwrap();
    solve_critical(&lat, spin, n, &ContinuationSchedule::default(), None).unwrap()
}

/// Eigenspinor for `√2π` on the unit square with spin signs `(−1, −1)` whose
/// only zero is a simple one at the origin.
fn branch_datum(n: usize) -> SpinorField {
    let spin = SpinStructure::from_signs(-1, -1).unwrap();
    SpinorField::from_twisted_fn(Lattice::unit_square(), spin, n, |s, t| {
        let (ss, cs) = (PI * s).sin_cos();
        let (st, ct) = (PI * t).sin_cos();
        [c(2.0 * SQRT_2 * ss * ct, -2.0 * SQRT_2 * cs * st), c(-4.0 * ss * st, 0.0)]
    })
    .unwrap()
}

/// `φ₊ = sin(πs′)e^{iπt′}`, `φ₋ = sin(πt′)e^{iπs′}` with `(s′, t′)` shifted by
/// `(s₀, t₀)`: one simple zero, at `(s₀, t₀)`.
fn one_zero_field(s0: f64, t0: f64) -> SpinorField {
    let spin = SpinStructure::from_signs(-1, -1).unwrap();
    SpinorField::from_twisted_fn(Lattice::unit_square(), spin, 16, |s, t| {
        let (a, b) = (PI * (s - s0), PI * (t - t0));
        [Complex64::from_polar(a.sin(), b), Complex64::from_polar(b.sin(), a)]
    })
    .unwrap()
}

#[test]
fn alpha_of_simple_data() {
    let lat = Lattice::unit_square();
    let zero = SpinorField::zeros(lat, SpinStructure::trivial(), 8).unwrap();
    let a0 = build_alpha(&zero);
    assert!((0..64).all(|i| a0.at(i).iter().all(|z| z.norm() == 0.0)));

    let cc = c(0.6, -0.3);
    let plus_only = SpinorField::from_twisted_fn(lat, SpinStructure::trivial(), 8, |_, _| [cc, c(0.0, 0.0)]).unwrap();
    let a = build_alpha(&plus_only);
    let expect = [SQRT_2 * cc * cc, SQRT_2 * c(0.0, 1.0) * cc * cc, c(0.0, 0.0)];
    for i in 0..64 {
        for (u, v) in a.at(i).iter().zip(&expect) {
            assert!((u - v).norm() < 1e-15);
        }
    }
}

#[test]
fn alpha_is_even_and_differential_has_spinor_length() {
    let lat = Lattice::new([1.0, 0.2], [-0.3, 1.1]).unwrap();
    let spin = SpinStructure::from_signs(-1, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phi = random_band_limited(&lat, spin, 8, 2, &mut rng).unwrap();
    assert_eq!(build_alpha(&phi), build_alpha(&phi.scaled_real(-1.0)));
    let [gs, gt] = build_alpha(&phi).differential();
    let det = lat.det();
    let [g1, g2] = [lat.gamma1(), lat.gamma2()];
    for i in 0..phi.len() {
        let dx = (gs[i] * g2[1] - gt[i] * g1[1]) / det;
        let dy = (gt[i] * g1[0] - gs[i] * g2[0]) / det;
        let rho = phi.norm_sqr_at(i);
        assert!((dx.norm() - rho).abs() < 1e-12 * rho.max(1.0));
        assert!((dy.norm() - rho).abs() < 1e-12 * rho.max(1.0));
        assert!(dx.dot(&dy).abs() < 1e-12 * rho.max(1.0).powi(2));
    }
}

#[test]
fn closedness_detects_non_solutions() {
    let sol = cylinder(2.0, 16);
    assert!(closedness_residual(&build_alpha(&sol.phi)) < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lat = Lattice::unit_square();
    let spin = SpinStructure::from_signs(1, -1).unwrap();
    let random = random_band_limited(&lat, spin, 16, 3, &mut rng).unwrap();
    let residual = closedness_residual(&build_alpha(&random));
    assert!(residual > 1e-2, "{residual}");
    match integrate_immersion(&build_alpha(&random), 1.0, &IntegrateOptions::default()) {
        Err(Error::NotClosed { residual: r, .. }) => assert_eq!(r, residual),
        other => panic!("expected a refusal, got {other:?}"),
    }
}

#[test]
fn cylinder_calibration() {
    for y in [1.0, 2.0] {
        let sol = cylinder(y, 32);
        assert!((sol.lambda - PI / y.sqrt()).abs() < 1e-10);
        let imm = immersion_from_solution(&sol, &IntegrateOptions::default()).unwrap();
        let [v1, v2] = imm.periods();
        assert!((v1.norm() - 1.0 / y.sqrt()).abs() < 1e-12);
        assert!(v2.norm() < 1e-12);
        let axis = v1.normalize();
        let centre: Vector3<f64> = imm.points().iter().sum::<Vector3<f64>>() / imm.points().len() as f64;
        for p in imm.points() {
            let d = p - centre;
            let r = (d - axis * d.dot(&axis)).norm();
            assert!((r - y.sqrt() / (2.0 * PI)).abs() < 1e-12);
        }
        for h in mean_curvature(&imm) {
            assert!((h - PI / y.sqrt()).abs() < 1e-3, "{h}");
        }
        let report = verify_immersion(&imm, &sol.phi, sol.lambda, &VerifyOptions::default()).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(imm.branch_points().is_empty());
    }
}

#[test]
fn parallel_spinor_gives_a_plane() {
    let lat = Lattice::new([1.0, 0.0], [0.3, 0.8]).unwrap();
    let phi = SpinorField::from_twisted_fn(lat, SpinStructure::trivial(), 8, |_, _| [c(0.8, 0.1), c(-0.2, 0.5)]).unwrap();
    let imm = integrate_immersion(&build_alpha(&phi), 0.0, &IntegrateOptions::default()).unwrap();
    let [v1, v2] = imm.periods();
    assert!(v1.norm() > 0.1 && v2.norm() > 0.1);
    let normal = v1.cross(&v2).normalize();
    assert!(imm.points().iter().all(|p| p.dot(&normal).abs() < 1e-13));
    let report = verify_immersion(&imm, &phi, 0.0, &VerifyOptions::default()).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn zero_form_integrates_to_a_point() {
    let zero = SpinorField::zeros(Lattice::unit_square(), SpinStructure::trivial(), 8).unwrap();
    let imm = integrate_immersion(&build_alpha(&zero), 0.0, &IntegrateOptions::default()).unwrap();
    assert!(imm.points().iter().all(|p| p.norm() == 0.0));
    assert!(imm.periods().iter().all(|v| v.norm() == 0.0));
    let sol = Solution::evaluate(zero, 1.0, 4.0);
    assert!(matches!(
        immersion_from_solution(&sol, &IntegrateOptions::default()),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn branch_point_of_even_order() {
    let phi = branch_datum(32);
    let d = apply_dirac(&phi);
    assert!(d.sub(&phi.scaled_real(SQRT_2 * PI)).l2_norm() < 1e-12);
    let imm = integrate_immersion(&build_alpha(&phi), 0.0, &IntegrateOptions::default()).unwrap();
    let bps = imm.branch_points();
    assert_eq!(bps.len(), 1, "{bps:?}");
    assert_eq!(bps[0].order, 2);
    assert!(bps[0].s.min(1.0 - bps[0].s) < 1e-6 && bps[0].t.min(1.0 - bps[0].t) < 1e-6);
    assert!(conformality_error(&imm, &phi) < 1e-12);

    let zeros = count_zeros(&phi, SQRT_2 * PI, 1, 1e-6);
    assert_eq!(zeros.zeros.len(), 1);
    assert_eq!(zeros.zeros[0].order, 1);
}

#[test]
fn synthetic_zero_is_found_off_grid() {
    let phi = one_zero_field(0.3, 0.55);
    let rep = count_zeros(&phi, 4.0, 1, 1e-6);
    assert_eq!(rep.zeros.len(), 1);
    let z = &rep.zeros[0];
    assert!((z.s - 0.3).abs() < 1e-10 && (z.t - 0.55).abs() < 1e-10);
    assert_eq!(z.order, 1);
    assert!(rep.bound >= 1.0 && rep.ok);
    // with λ = π the bound is π/4 < 1: the field cannot solve the equation
    assert!(!count_zeros(&phi, PI, 1, 1e-6).ok);
}

#[test]
fn constant_length_solution_has_no_zeros() {
    let sol = cylinder(1.0, 16);
    let rep = count_zeros(&sol.phi, sol.lambda, 1, 1e-6);
    assert!(rep.zeros.is_empty());
    assert!((rep.bound - PI / 4.0).abs() < 1e-9);
    assert!(rep.ok);
}

#[test]
fn mesh_counts_and_sidecar() {
    let sol = cylinder(1.0, 8);
    let imm = immersion_from_solution(&sol, &IntegrateOptions::default()).unwrap();
    let text = obj_text(&imm, (3, 1)).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 25 * 9);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 2 * 24 * 8);
    assert!(obj_text(&imm, (0, 1)).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cyl.obj");
    let report = verify_immersion(&imm, &sol.phi, sol.lambda, &VerifyOptions::default()).unwrap();
    let files = export_mesh(&imm, Some(&report), (2, 2), &path).unwrap();
    let side: MeshSidecar = serde_json::from_str(&std::fs::read_to_string(&files.sidecar).unwrap()).unwrap();
    assert_eq!(side.vertices, 17 * 17);
    assert_eq!(side.h, sol.lambda);
    assert!(side.diagnostics.conformality.unwrap() < 1e-8);
    assert!(files.obj.exists());

    let missing = dir.path().join("no/such/dir/x.obj");
    assert!(matches!(export_mesh(&imm, None, (1, 1), &missing), Err(Error::Io { .. })));
}

#[test]
fn plane_mesh_spans_its_periods() {
    let lat = Lattice::new([1.0, 0.0], [0.0, 1.0]).unwrap();
    let phi = SpinorField::from_twisted_fn(lat, SpinStructure::trivial(), 4, |_, _| [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let imm = integrate_immersion(&build_alpha(&phi), 0.0, &IntegrateOptions::default()).unwrap();
    let text = obj_text(&imm, (2, 3)).unwrap();
    let verts: Vec<Vector3<f64>> = text
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            Vector3::new(v[0], v[1], v[2])
        })
        .collect();
    let [v1, v2] = imm.periods();
    let far = verts.last().unwrap();
    assert!((far - (v1 * 2.0 + v2 * 3.0)).norm() < 1e-13);
}
