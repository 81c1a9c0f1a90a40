use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::integrate::Immersion;
use crate::check::{Check, CheckReport};
use crate::error::{Error, Result};
use crate::spinor::SpinorField;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub conformality_tol: f64,
    pub tol_closed: f64,
    /// Median relative mean-curvature error allowed when `H ≠ 0`.
    pub cmc_tol: f64,
    /// Median `|H|` allowed when `H = 0`.
    pub flat_tol: f64,
    pub period_tol: f64,
    pub area_tol: f64,
    /// Vertices within this many grid cells of a branch point are left out
    /// of the mean-curvature statistics.
    pub exclusion_cells: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            conformality_tol: 1e-8,
            tol_closed: 1e-6,
            cmc_tol: 0.01,
            flat_tol: 1e-6,
            period_tol: 1e-10,
            area_tol: 1e-8,
            exclusion_cells: 3.0,
        }
    }
}

/// `max | |∂_xF| − |φ|² |`, the same for `∂_yF`, and `|⟨∂_xF, ∂_yF⟩|`, over
/// the grid and relative to `max|φ|²`.
pub fn conformality_error(imm: &Immersion, phi: &SpinorField) -> f64 {
    let [dx, dy] = imm.cartesian_tangents();
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for i in 0..dx.len() {
        let rho = phi.norm_sqr_at(i);
        peak = peak.max(rho);
        let e = (dx[i].norm() - rho)
            .abs()
            .max((dy[i].norm() - rho).abs())
            .max(dx[i].dot(&dy[i]).abs());
        worst = worst.max(e);
    }
    if peak == 0.0 {
        worst
    } else {
        worst / peak
    }
}

/// Discrete mean curvature per grid vertex of the periodic triangle mesh
/// (cells split along the `(j,l)–(j+1,l+1)` diagonal): `H = −½⟨K, n⟩` with
/// `K` the cotangent Laplacian of the positions over barycentric areas and
/// `n` the area-weighted normal oriented like `∂_sF × ∂_tF`.
pub fn mean_curvature(imm: &Immersion) -> Vec<f64> {
    let n = imm.n();
    let mut lap = vec![Vector3::zeros(); n * n];
    let mut area = vec![0.0; n * n];
    let mut normal = vec![Vector3::zeros(); n * n];
    let index = |j: i64, l: i64| (j.rem_euclid(n as i64) * n as i64 + l.rem_euclid(n as i64)) as usize;
    for j in 0..n as i64 {
        for l in 0..n as i64 {
            for tri in [[(j, l), (j + 1, l), (j + 1, l + 1)], [(j, l), (j + 1, l + 1), (j, l + 1)]] {
                let p = tri.map(|(a, b)| imm.point_unwrapped(a, b));
                let id = tri.map(|(a, b)| index(a, b));
                let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
                let a2 = cross.norm();
                if a2 == 0.0 {
                    continue;
                }
                for k in 0..3 {
                    let (o, a, b) = (k, (k + 1) % 3, (k + 2) % 3);
                    let u = p[a] - p[o];
                    let v = p[b] - p[o];
                    let cot = u.dot(&v) / u.cross(&v).norm();
                    lap[id[a]] += (p[b] - p[a]) * cot;
                    lap[id[b]] += (p[a] - p[b]) * cot;
                    area[id[o]] += a2 / 6.0;
                    normal[id[o]] += cross;
                }
            }
        }
    }
    (0..n * n)
        .map(|i| {
            let nn = normal[i].norm();
            if area[i] == 0.0 || nn == 0.0 {
                return f64::NAN;
            }
            let k = lap[i] / (2.0 * area[i]);
            -0.5 * k.dot(&(normal[i] / nn))
        })
        .collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median of the pointwise mean-curvature error away from branch points:
/// relative to `|H|` when `H ≠ 0`, absolute otherwise.
pub fn cmc_median_error(imm: &Immersion, opts: &VerifyOptions) -> f64 {
    let n = imm.n();
    let h = imm.h();
    let curv = mean_curvature(imm);
    let radius = opts.exclusion_cells / n as f64;
    let errors = (0..n * n)
        .filter(|&i| {
            let (s, t) = ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
            imm.branch_points().iter().all(|b| {
                let d = |x: f64, y: f64| {
                    let r = (x - y).rem_euclid(1.0);
                    r.min(1.0 - r)
                };
                d(s, b.s).hypot(d(t, b.t)) > radius
            })
        })
        .map(|i| if h == 0.0 { curv[i].abs() } else { (curv[i] - h).abs() / h.abs() })
        .collect();
    median(errors)
}

/// Conformality, closedness, constant mean curvature, branch-order parity,
/// period additivity and the area identity `area = ‖φ‖₄⁴`.
pub fn verify_immersion(imm: &Immersion, phi: &SpinorField, h: f64, opts: &VerifyOptions) -> Result<CheckReport> {
    if imm.n() != phi.n() || imm.lattice() != phi.lattice() {
        return Err(Error::GridMismatch("immersion and spinor field live on different grids".into()));
    }
    let mut report = CheckReport::default();
    report.push(Check::at_most("conformality", conformality_error(imm, phi), opts.conformality_tol));
    report.push(Check::at_most("closedness", imm.closedness(), opts.tol_closed));

    let mut target = imm.clone();
    target.set_h(h);
    if h == 0.0 {
        report.push(Check::at_most("cmc_median_abs", cmc_median_error(&target, opts), opts.flat_tol));
    } else {
        report.push(Check::at_most("cmc_median_rel", cmc_median_error(&target, opts), opts.cmc_tol));
    }

    let odd = imm.branch_points().iter().filter(|b| b.order % 2 == 1).count();
    report.push(Check::at_most("branch_orders_odd", odd as f64, 0.0));

    let [ds, dt] = imm.tangents();
    let diagonal: Vector3<f64> = ds.iter().zip(&dt).map(|(a, b)| a + b).sum::<Vector3<f64>>() / ds.len() as f64;
    let [v1, v2] = imm.periods();
    let scale = (v1.norm() + v2.norm()).max(f64::MIN_POSITIVE);
    report.push(Check::at_most(
        "period_additivity",
        (diagonal - imm.period_of(1, 1)).norm() / scale,
        opts.period_tol,
    ));

    let expected = phi.lp_integral(4.0);
    let area_err = if expected == 0.0 { imm.area() } else { (imm.area() - expected).abs() / expected };
    report.push(Check::at_most("area_equals_l4_norm", area_err, opts.area_tol));
    Ok(report)
}
