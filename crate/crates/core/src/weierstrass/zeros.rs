use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrate::Immersion;
use crate::dirac::Interpolant;
use crate::fft::TrigInterpolant;
use crate::geometry::Lattice;
use crate::spinor::SpinorField;

/// An isolated zero of the spinor field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorZero {
    /// Lattice coordinates in `[0, 1)²`.
    pub s: f64,
    pub t: f64,
    /// Physical position.
    pub x: f64,
    pub y: f64,
    /// Estimated vanishing order.
    pub order: u32,
    /// `|φ|` at the refined location relative to `max|φ|`.
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub zeros: Vec<SpinorZero>,
    /// Zeros counted with their vanishing order.
    pub weighted_count: u32,
    /// `genus − 1 + λ²/(4π)`.
    pub bound: f64,
    /// `weighted_count ≤ bound`.
    pub ok: bool,
}

/// A branch point of an immersion: a zero of `dF`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub s: f64,
    pub t: f64,
    /// Physical position in the parameter plane.
    pub u: f64,
    pub v: f64,
    /// Vanishing order of `dF`; twice that of the spinor.
    pub order: u32,
    pub depth: f64,
}

/// Grid points whose value is at most every periodic 3×3 neighbour and below
/// `ceiling`, lowest first.
fn local_minima(values: &[f64], n: usize, ceiling: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..n {
        for l in 0..n {
            let v = values[j * n + l];
            if !(v < ceiling) {
                continue;
            }
            let is_min = (-1i64..=1).all(|dj| {
                (-1i64..=1).all(|dl| {
                    let jj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                    let ll = (l as i64 + dl).rem_euclid(n as i64) as usize;
                    v <= values[jj * n + ll]
                })
            });
            if is_min {
                out.push((j, l));
            }
        }
    }
    out.sort_by(|a, b| values[a.0 * n + a.1].total_cmp(&values[b.0 * n + b.1]));
    out
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn periodic_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let d = |x: f64, y: f64| {
        let r = (x - y).rem_euclid(1.0);
        r.min(1.0 - r)
    };
    d(a.0, b.0).hypot(d(a.1, b.1))
}

/// Vanishing order from the growth of the circle mean of `f` between radii
/// `r` and `2r` around `(s, t)`.
fn decay_order(f: impl Fn(f64, f64) -> f64, s: f64, t: f64, r: f64) -> u32 {
    let mean = |rad: f64| {
        (0..16)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 16.0;
                f(s + rad * th.cos(), t + rad * th.sin())
            })
            .sum::<f64>()
            / 16.0
    };
    let ratio = mean(2.0 * r) / mean(r);
    ratio.log2().round().max(1.0) as u32
}

/// Gauss–Newton on `|φ(s, t)|²` using the interpolant's jet.
fn refine_spinor_zero(interp: &Interpolant, s0: f64, t0: f64, max_step: f64) -> (f64, f64) {
    let (mut s, mut t) = (s0, t0);
    for _ in 0..60 {
        let [v, ds, dt] = interp.jet(s, t);
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for c in 0..2 {
            for (r, a, b) in [(v[c].re, ds[c].re, dt[c].re), (v[c].im, ds[c].im, dt[c].im)] {
                jtj += Matrix2::new(a * a, a * b, a * b, b * b);
                jtr += Vector2::new(a * r, b * r);
            }
        }
        let Some(inv) = jtj.try_inverse() else { break };
        let mut step = -(inv * jtr);
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        s += step[0];
        t += step[1];
        if step.norm() < 1e-15 {
            break;
        }
    }
    (wrap(s), wrap(t))
}

/// Locates the zeros of `φ` and compares their number, counted with vanishing
/// order, to `genus − 1 + λ²/(4π)`. Candidates are local minima of `|φ|` on
/// the grid, refined off-grid; a candidate is a zero when the refined `|φ|`
/// is below `zero_tol·max|φ|`.
pub fn count_zeros(phi: &SpinorField, lambda: f64, genus: u32, zero_tol: f64) -> ZeroReport {
    let n = phi.n();
    let norms = phi.pointwise_norms();
    let max = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let bound = genus as f64 - 1.0 + lambda * lambda / (4.0 * PI);
    let mut zeros: Vec<SpinorZero> = Vec::new();
    if max > 0.0 {
        let interp = Interpolant::new(phi);
        let abs = |s: f64, t: f64| {
            let [a, b] = interp.value(s, t);
            (a.norm_sqr() + b.norm_sqr()).sqrt()
        };
        let h = 1.0 / n as f64;
        for (j, l) in local_minima(&norms, n, 0.5 * max).into_iter().take(64) {
            let (s, t) = refine_spinor_zero(&interp, j as f64 * h, l as f64 * h, h);
            let depth = abs(s, t) / max;
            if !(depth < zero_tol) || zeros.iter().any(|z| periodic_distance((z.s, z.t), (s, t)) < 1e-3 * h) {
                continue;
            }
            let [x, y] = phi.lattice().point(s, t);
            let order = decay_order(abs, s, t, 0.05 * h);
            zeros.push(SpinorZero {
                s,
                t,
                x,
                y,
                order,
                depth,
            });
        }
    }
    let weighted_count = zeros.iter().map(|z| z.order).sum::<u32>();
    ZeroReport {
        ok: weighted_count as f64 <= bound,
        zeros,
        weighted_count,
        bound,
    }
}

/// `|dF|` off-grid, interpolated from the spectral tangents.
pub(crate) struct DifferentialInterpolant {
    inner: TrigInterpolant,
    lattice: Lattice,
}

impl DifferentialInterpolant {
    pub(crate) fn new(imm: &Immersion) -> Self {
        let [ds, dt] = imm.tangents();
        let pack = |f: &dyn Fn(usize) -> Complex64| (0..ds.len()).map(f).collect::<Vec<_>>();
        let c0 = pack(&|i| Complex64::new(ds[i][0], ds[i][1]));
        let c1 = pack(&|i| Complex64::new(ds[i][2], dt[i][0]));
        let c2 = pack(&|i| Complex64::new(dt[i][1], dt[i][2]));
        Self {
            inner: TrigInterpolant::new(&[&c0, &c1, &c2], imm.n(), [0.0, 0.0]),
            lattice: *imm.lattice(),
        }
    }

    pub(crate) fn norm(&self, s: f64, t: f64) -> f64 {
        let v = self.inner.value(s, t);
        let ds = Vector3::new(v[0].re, v[0].im, v[1].re);
        let dt = Vector3::new(v[1].im, v[2].re, v[2].im);
        let [g1, g2] = [self.lattice.gamma1(), self.lattice.gamma2()];
        let det = self.lattice.det();
        let dx = (ds * g2[1] - dt * g1[1]) / det;
        let dy = (dt * g1[0] - ds * g2[0]) / det;
        ((dx.norm_squared() + dy.norm_squared()) / 2.0).sqrt()
    }
}

/// Branch points of `F`: local minima of `|dF|` refined by a compass search
/// and kept when below `zero_tol·max|dF|`. The order is the decay rate of
/// `|dF|` itself, so evenness is a measured property.
pub fn locate_branch_points(imm: &Immersion, zero_tol: f64) -> Vec<BranchPoint> {
    let n = imm.n();
    let norms = imm.differential_norms();
    let max = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut out: Vec<BranchPoint> = Vec::new();
    if max == 0.0 {
        return out;
    }
    let interp = DifferentialInterpolant::new(imm);
    let h = 1.0 / n as f64;
    for (j, l) in local_minima(&norms, n, 0.5 * max).into_iter().take(64) {
        let (mut s, mut t) = (j as f64 * h, l as f64 * h);
        let mut best = interp.norm(s, t);
        let mut step = 0.5 * h;
        while step > 1e-13 && best > 0.0 {
            let mut moved = false;
            for (ds, dt) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let v = interp.norm(s + ds * step, t + dt * step);
                if v < best {
                    best = v;
                    s += ds * step;
                    t += dt * step;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        let (s, t) = (wrap(s), wrap(t));
        let depth = best / max;
        if !(depth < zero_tol) || out.iter().any(|b| periodic_distance((b.s, b.t), (s, t)) < 1e-2 * h) {
            continue;
        }
        let [u, v] = imm.lattice().point(s, t);
        let order = decay_order(|a, b| interp.norm(a, b), s, t, 0.1 * h);
        out.push(BranchPoint {
            s,
            t,
            u,
            v,
            order,
            depth,
        });
    }
    out
}
