//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use torus_dirac::dirac::{apply_dirac, dirac_eigenvalues_dense, first_eigenspinor, random_band_limited};
use torus_dirac::geometry::{closed_form_spectrum, sphere_lambda_min, DualModeSet, Lattice, SpinStructure};
use torus_dirac::nonlinear::{solve_critical, ContinuationSchedule, Solution};
use torus_dirac::report::threshold_verdict;
use torus_dirac::spinor::SpinorField;
use torus_dirac::variational::{functional_fq, grad_fq, maximize_fq, mu_curve, perturbed_start, MaximizeOptions, MuCurveOptions};
use torus_dirac::weierstrass::{
    build_alpha, conformality_error, count_zeros, immersion_from_solution, mean_curvature, median, IntegrateOptions,
};

type Outcome = Result<String, Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome);

fn nontrivial() -> SpinStructure {
    SpinStructure::from_signs(1, -1).unwrap()
}

fn rectangle(y: f64) -> Lattice {
    Lattice::new([1.0, 0.0], [0.0, y]).unwrap()
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail.into())
    }
}

/// A reduced lattice shape scaled to a random area in `[0.5, 4]`.
fn random_lattice(rng: &mut ChaCha8Rng) -> Lattice {
    let (x, y) = loop {
        let x: f64 = rng.gen_range(-0.5..0.5);
        let y: f64 = rng.gen_range(0.8..2.0);
        if x * x + y * y >= 1.0 {
            break (x, y);
        }
    };
    let area: f64 = rng.gen_range(0.5..4.0);
    Lattice::normalized(x, y).unwrap().with_unit_area().scaled(area.sqrt()).unwrap()
}

fn spectrum_exactness() -> Outcome {
    const N: usize = 12;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..20 {
        let lat = random_lattice(&mut rng);
        for spin in SpinStructure::all() {
            let numeric = dirac_eigenvalues_dense(&lat, spin, N)?;
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);

            // every mode with |(a, b)| < N/4 appears in the discrete spectrum
            let (d1, d2) = lat.dual_basis();
            let reach = 2.0 * PI * (N as f64 / 4.0) * (d1[0].hypot(d1[1]) + d2[0].hypot(d2[1]));
            let mut used = vec![false; numeric.len()];
            for mode in DualModeSet::within(&lat, spin, reach).modes {
                let (a, b) = mode.coords();
                if a.hypot(b) >= N as f64 / 4.0 {
                    continue;
                }
                let lam = 2.0 * PI * mode.norm(&lat);
                for target in [lam, -lam] {
                    let hit = (0..numeric.len())
                        .filter(|&i| !used[i])
                        .min_by(|&i, &j| rel(target, numeric[i]).total_cmp(&rel(target, numeric[j])))
                        .ok_or("ran out of discrete eigenvalues")?;
                    used[hit] = true;
                    worst = worst.max(rel(target, numeric[hit]));
                    checked += 1;
                }
            }

            // below a radius the grid resolves completely the sorted lists agree
            let cut = 2.0 * PI * lat.dual_sigma_min() * N as f64 / 4.0;
            let mut low: Vec<f64> = numeric.iter().copied().filter(|v| v.abs() < cut).collect();
            low.sort_by(f64::total_cmp);
            let closed: Vec<f64> = closed_form_spectrum(&lat, spin, low.len() + 8)
                .into_iter()
                .filter(|(v, _)| v.abs() < cut)
                .flat_map(|(v, m)| std::iter::repeat_n(v, m))
                .collect();
            if closed.len() != low.len() {
                return Err(format!("{} closed-form vs {} discrete values below {cut:.3}", closed.len(), low.len()).into());
            }
            for (a, b) in closed.iter().zip(&low) {
                worst = worst.max(rel(*a, *b));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-8 && secs < 30.0,
        format!("80 tori, {checked} modes, max rel err {worst:.2e} (< 1e-8), {secs:.1} s (< 30 s)"),
    )
}

fn rectangle_bound() -> Outcome {
    let mut worst: f64 = 0.0;
    for y in [1.0, 2.0, 4.0] {
        let lat = rectangle(y);
        let numeric = dirac_eigenvalues_dense(&lat, nontrivial(), 12)?;
        let l1 = numeric.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        worst = worst.max((l1 * lat.area().sqrt() - PI / y.sqrt()).abs());
        let (_, l1_eig) = first_eigenspinor(&lat, nontrivial(), 16)?;
        worst = worst.max((l1_eig * lat.area().sqrt() - PI / y.sqrt()).abs());
    }
    verdict(worst < 1e-10, format!("y ∈ {{1, 2, 4}}: max |λ₁⁺√area − π/√y| = {worst:.2e} (< 1e-10)"))
}

fn duality() -> Outcome {
    let start = Instant::now();
    let init = perturbed_start(&Lattice::unit_square(), nontrivial(), 16, 0.1, 3)?;
    let m = maximize_fq(&init, 2.0, &MaximizeOptions::default())?;
    let err = (m.mu - 1.0 / PI).abs();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        err < 1e-6 && secs < 60.0,
        format!("|μ₂ − 1/π| = {err:.2e} (< 1e-6) after {} steps, {secs:.1} s (< 60 s)", m.iterations),
    )
}

fn monotonicity() -> Outcome {
    const N: usize = 16;
    let qs = [1.4, 1.5, 1.6, 1.8, 2.0];
    let opts = MuCurveOptions::default();
    let tol = opts.maximize.tol_for(N);
    let mut lines = Vec::new();
    let mut ok = true;
    for (lat, spin) in [
        (Lattice::unit_square(), nontrivial()),
        (Lattice::normalized(0.3, 1.2)?, SpinStructure::from_signs(-1, -1)?),
    ] {
        let rows = mu_curve(&lat, spin, N, &qs, &opts)?;
        let rise = rows.windows(2).map(|w| w[1].mu - w[0].mu).fold(f64::NEG_INFINITY, f64::max);
        let converged = rows.iter().all(|r| r.converged);
        ok &= rise <= 2.0 * tol && converged;
        let mus: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.mu)).collect();
        lines.push(format!("[{}] max rise {rise:.2e}", mus.join(", ")));
    }
    verdict(ok, format!("{} (allowed {:.1e})", lines.join("; "), 2.0 * tol))
}

fn gradient_check() -> Outcome {
    let lat = Lattice::normalized(0.2, 1.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for f in 0..5 {
        let spin = SpinStructure::all()[f % 4];
        let phi = random_band_limited(&lat, spin, 12, 3, &mut rng)?;
        for q in [1.5, 2.0] {
            let g = grad_fq(&phi, q)?;
            for _ in 0..10 {
                let dir = random_band_limited(&lat, spin, 12, 3, &mut rng)?;
                let exact = g.real_inner(&dir);
                let fd = (functional_fq(&phi.add_scaled(h, &dir), q)? - functional_fq(&phi.add_scaled(-h, &dir), q)?) / (2.0 * h);
                worst = worst.max((fd - exact).abs() / exact.abs());
            }
        }
    }
    verdict(worst < 1e-5, format!("100 directional derivatives, max rel err {worst:.2e} (< 1e-5)"))
}

fn critical_solve() -> Outcome {
    let start = Instant::now();
    let sol = solve_critical(&Lattice::unit_square(), nontrivial(), 32, &ContinuationSchedule::default(), None)?;
    let secs = start.elapsed().as_secs_f64();
    let err = (sol.lambda - PI).abs();
    let ratio = sol.phi.min_abs() / sol.phi.max_abs();
    verdict(
        err < 1e-6 && sol.residual < 1e-8 && ratio > 0.999 && secs < 300.0,
        format!(
            "|λ − π| = {err:.2e} (< 1e-6), residual {:.2e} (< 1e-8), min/max |φ| = {ratio:.6} (> 0.999), {secs:.1} s (< 300 s)",
            sol.residual
        ),
    )
}

fn nodal_bound() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let tori = [
        (Lattice::unit_square(), nontrivial()),
        (rectangle(2.0), nontrivial()),
        (rectangle(0.6), nontrivial()),
        (Lattice::normalized(0.3, 1.2)?, SpinStructure::from_signs(-1, -1)?),
        (Lattice::normalized(-0.2, 1.0)?, SpinStructure::from_signs(-1, 1)?),
    ];
    let mut below = 0;
    for (lat, spin) in tori {
        let sol = solve_critical(&lat, spin, 16, &ContinuationSchedule::default(), None)?;
        let la = sol.lambda * sol.norm_p.powi(2);
        if !threshold_verdict(la).below {
            continue;
        }
        below += 1;
        let rep = count_zeros(&sol.phi, la, 1, 1e-6);
        ok &= rep.zeros.is_empty();
        lines.push(format!("{}", rep.zeros.len()));
    }

    // φ₊ = sin(πs′)e^{iπt′}, φ₋ = sin(πt′)e^{iπs′} vanishes only at (s₀, t₀)
    let (s0, t0) = (0.37, 0.61);
    let synthetic = SpinorField::from_twisted_fn(
        Lattice::unit_square(),
        SpinStructure::from_signs(-1, -1)?,
        16,
        |s, t| {
            let (a, b) = (PI * (s - s0), PI * (t - t0));
            [Complex64::from_polar(a.sin(), b), Complex64::from_polar(b.sin(), a)]
        },
    )?;
    let found = count_zeros(&synthetic, 4.0, 1, 1e-6).zeros.len();
    ok &= found == 1 && below > 0;
    verdict(
        ok,
        format!("zeros on {below} sub-threshold solutions: [{}] (all 0); synthetic field: {found} (= 1)", lines.join(", ")),
    )
}

/// Rigid alignment of `p` onto `q`; returns the largest residual distance.
fn procrustes(p: &[Vector3<f64>], q: &[Vector3<f64>]) -> f64 {
    let cp: Vector3<f64> = p.iter().sum::<Vector3<f64>>() / p.len() as f64;
    let cq: Vector3<f64> = q.iter().sum::<Vector3<f64>>() / q.len() as f64;
    let mut h = Matrix3::zeros();
    for (a, b) in p.iter().zip(q) {
        h += (a - cp) * (b - cq).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    let r = vt.transpose() * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    p.iter().zip(q).map(|(a, b)| (r * (a - cp) - (b - cq)).norm()).fold(0.0, f64::max)
}

fn cylinder_round_trip() -> Outcome {
    const N: usize = 128;
    let mut lines = Vec::new();
    let mut ok = true;
    for y in [1.0, 2.0] {
        let lat = rectangle(y);
        let (phi, l1) = first_eigenspinor(&lat, nontrivial(), N)?;
        let phi = phi.scaled_real(1.0 / phi.lp_norm(4.0));
        let lambda = l1 / phi.max_abs().powi(2);
        let sol = Solution::evaluate(phi, lambda, 4.0);
        let imm = immersion_from_solution(&sol, &IntegrateOptions::default())?;
        let r = y.sqrt() / (2.0 * PI);
        // s runs along the axis and t around the circle
        let analytic: Vec<Vector3<f64>> = (0..N * N)
            .map(|i| {
                let (s, t) = ((i / N) as f64 / N as f64, (i % N) as f64 / N as f64);
                let th = 2.0 * PI * t;
                Vector3::new(r * th.cos(), r * th.sin(), s / y.sqrt())
            })
            .collect();
        let mirrored: Vec<Vector3<f64>> = analytic.iter().map(|v| Vector3::new(v.x, -v.y, v.z)).collect();
        // the cylinder is determined up to O(3), so orientation-reversed alignment counts
        let dist = procrustes(imm.points(), &analytic).min(procrustes(imm.points(), &mirrored));
        let v1 = imm.periods()[0].norm();
        let hs = mean_curvature(&imm);
        let h_err = (median(hs) - PI / y.sqrt()).abs() / (PI / y.sqrt());
        ok &= dist < 1e-4 && (v1 - 1.0 / y.sqrt()).abs() < 1e-8 && h_err < 0.01;
        lines.push(format!(
            "y = {y}: mesh dist {dist:.2e} (< 1e-4), ||V₁|| − 1/√y = {:.1e} (< 1e-8), median H rel err {h_err:.1e} (< 1e-2)",
            v1 - 1.0 / y.sqrt()
        ));
    }
    verdict(ok, lines.join("; "))
}

fn conformality() -> Outcome {
    let mut ok = true;
    let mut exact_worst: f64 = 0.0;
    let mut solver_lines = Vec::new();
    for (lat, spin) in [
        (Lattice::unit_square(), nontrivial()),
        (rectangle(2.0), nontrivial()),
        (Lattice::normalized(0.3, 1.2)?, SpinStructure::from_signs(-1, -1)?),
    ] {
        let (phi, l1) = first_eigenspinor(&lat, spin, 32)?;
        let phi = phi.scaled_real(1.0 / phi.lp_norm(4.0));
        let lambda = l1 / phi.max_abs().powi(2);
        let exact = Solution::evaluate(phi, lambda, 4.0);
        let imm = immersion_from_solution(&exact, &IntegrateOptions::default())?;
        exact_worst = exact_worst.max(conformality_error(&imm, &exact.phi));

        let sol = solve_critical(&lat, spin, 32, &ContinuationSchedule::default(), None)?;
        let imm = immersion_from_solution(&sol, &IntegrateOptions::default())?;
        let c = conformality_error(&imm, &sol.phi);
        ok &= c < 10.0 * sol.residual.max(f64::EPSILON);
        solver_lines.push(format!("{c:.1e} vs 10·{:.1e}", sol.residual));
    }
    ok &= exact_worst < 1e-8;
    verdict(
        ok,
        format!("exact: {exact_worst:.2e} (< 1e-8); solver: {}", solver_lines.join(", ")),
    )
}

fn sphere_constant() -> Outcome {
    let s = sphere_lambda_min(2)?;
    let err = (s - 2.0 * PI.sqrt()).abs();
    let flips = threshold_verdict(s - 1e-9).below && !threshold_verdict(s + 1e-9).below && !threshold_verdict(s).below;
    verdict(
        err < 1e-12 && flips,
        format!("|λ_min⁺(S²) − 2√π| = {err:.1e} (< 1e-12); verdict flips at ±1e-9: {flips}"),
    )
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let lat = Lattice::normalized(0.25, 1.3)?;
    let (mut scale, mut even, mut kernel): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..10 {
        let spin = SpinStructure::all()[k % 4];
        let phi = random_band_limited(&lat, spin, 12, 3, &mut rng)?;
        let q = 1.4 + 0.06 * k as f64;
        let f = functional_fq(&phi, q)?;
        let t: f64 = rng.gen_range(0.1..10.0);
        scale = scale.max((functional_fq(&phi.scaled_real(t), q)? - f).abs() / f.abs());

        let a = build_alpha(&phi);
        let b = build_alpha(&phi.scaled_real(-1.0));
        for i in 0..phi.len() {
            for (u, v) in a.at(i).iter().zip(b.at(i)) {
                even = even.max((u - v).norm());
            }
        }

        // constant spinors span ker D on the trivial spin structure
        let trivial = random_band_limited(&lat, SpinStructure::trivial(), 12, 3, &mut rng)?;
        let c = [
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ];
        let constant = SpinorField::from_twisted_fn(lat, SpinStructure::trivial(), 12, |_, _| c)?;
        debug_assert!(apply_dirac(&constant).l2_norm() < 1e-12);
        let g = functional_fq(&trivial, q)?;
        kernel = kernel.max((functional_fq(&trivial.add_scaled(1.0, &constant), q)? - g).abs() / g.abs());
    }
    let ok = scale < 1e-12 && even == 0.0 && kernel < 1e-12;
    verdict(
        ok,
        format!("F_q(tφ): {scale:.1e}, α(−φ) − α(φ): {even:.1e}, F_q(φ + k): {kernel:.1e} (round-off, 10 inputs each)"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("spectrum exactness", spectrum_exactness),
        ("rectangular tori reach π/√y", rectangle_bound),
        ("μ₂ = 1/λ₁⁺", duality),
        ("μ_q non-increasing", monotonicity),
        ("gradient vs finite differences", gradient_check),
        ("critical solve on the square", critical_solve),
        ("nodal bound", nodal_bound),
        ("Weierstrass cylinder round trip", cylinder_round_trip),
        ("conformality", conformality),
        ("sphere constant and verdict", sphere_constant),
        ("gauge and homogeneity invariants", invariants),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
