use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::alpha::{build_alpha, closedness_residual, vector_gradient, OneFormField};
use super::zeros::{locate_branch_points, BranchPoint};
use crate::error::{Error, Result};
use crate::fft;
use crate::geometry::Lattice;
use crate::nonlinear::Solution;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateOptions {
    /// Largest closedness residual accepted before integrating.
    pub tol_closed: f64,
    /// A local minimum of `|dF|` below `zero_tol·max|dF|` is a branch point.
    pub zero_tol: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            tol_closed: 1e-6,
            zero_tol: 1e-6,
        }
    }
}

/// A periodic conformal immersion sampled on one fundamental domain:
/// `F(x + γᵢ) = F(x) + Vᵢ`, normalized by `F(0) = 0`.
#[derive(Debug, Clone)]
pub struct Immersion {
    lattice: Lattice,
    n: usize,
    points: Vec<Vector3<f64>>,
    periods: [Vector3<f64>; 2],
    h: f64,
    closedness: f64,
    branch_points: Vec<BranchPoint>,
}

impl Immersion {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `F` at grid point `(j, l)`, i.e. at lattice coordinates `(j/N, l/N)`.
    pub fn point(&self, j: usize, l: usize) -> Vector3<f64> {
        self.points[j * self.n + l]
    }

    /// `F` at `(j, l)` for any integers, using the periods across seams.
    pub fn point_unwrapped(&self, j: i64, l: i64) -> Vector3<f64> {
        let n = self.n as i64;
        let (qj, rj) = (j.div_euclid(n), j.rem_euclid(n));
        let (ql, rl) = (l.div_euclid(n), l.rem_euclid(n));
        self.points[(rj * n + rl) as usize] + self.periods[0] * qj as f64 + self.periods[1] * ql as f64
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// `(V₁, V₂)`, the translations along `γ₁` and `γ₂`.
    pub fn periods(&self) -> [Vector3<f64>; 2] {
        self.periods
    }

    /// The period of `a·γ₁ + b·γ₂`; additive by construction.
    pub fn period_of(&self, a: i64, b: i64) -> Vector3<f64> {
        self.periods[0] * a as f64 + self.periods[1] * b as f64
    }

    /// Mean curvature the immersion was built for.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub(crate) fn set_h(&mut self, h: f64) {
        self.h = h;
    }

    pub fn closedness(&self) -> f64 {
        self.closedness
    }

    pub fn branch_points(&self) -> &[BranchPoint] {
        &self.branch_points
    }

    /// Spectral `(∂_s F, ∂_t F)` on the grid: derivative of the periodic part
    /// plus the periods.
    pub fn tangents(&self) -> [Vec<Vector3<f64>>; 2] {
        let n = self.n;
        let periodic: Vec<Vector3<f64>> = (0..n * n)
            .map(|i| {
                let (s, t) = ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
                self.points[i] - self.periods[0] * s - self.periods[1] * t
            })
            .collect();
        let [mut ds, mut dt] = vector_gradient(&periodic, n);
        ds.iter_mut().for_each(|v| *v += self.periods[0]);
        dt.iter_mut().for_each(|v| *v += self.periods[1]);
        [ds, dt]
    }

    /// Cartesian `(∂_x F, ∂_y F)` from the lattice-coordinate tangents.
    pub fn cartesian_tangents(&self) -> [Vec<Vector3<f64>>; 2] {
        let [ds, dt] = self.tangents();
        let [g1, g2] = [self.lattice.gamma1(), self.lattice.gamma2()];
        let det = self.lattice.det();
        // (∂_s, ∂_t) = (g1·∇, g2·∇); invert the 2×2 system
        let dx = ds.iter().zip(&dt).map(|(a, b)| (a * g2[1] - b * g1[1]) / det).collect();
        let dy = ds.iter().zip(&dt).map(|(a, b)| (b * g1[0] - a * g2[0]) / det).collect();
        [dx, dy]
    }

    /// `|dF|` per grid point, as `√((|∂_xF|² + |∂_yF|²)/2)`.
    pub fn differential_norms(&self) -> Vec<f64> {
        let [dx, dy] = self.cartesian_tangents();
        dx.iter()
            .zip(&dy)
            .map(|(a, b)| ((a.norm_squared() + b.norm_squared()) / 2.0).sqrt())
            .collect()
    }

    /// `∫|∂_xF × ∂_yF| dx dy`, the area of one fundamental domain of the image.
    pub fn area(&self) -> f64 {
        let [dx, dy] = self.cartesian_tangents();
        let sum: f64 = dx.iter().zip(&dy).map(|(a, b)| a.cross(b).norm()).sum();
        sum * self.lattice.area() / (self.n * self.n) as f64
    }
}

/// Integrates `dF = Re α`. The mean of `Re α(∂_s)`, `Re α(∂_t)` gives the
/// periods; the oscillating rest is integrated in Fourier space by least
/// squares, which is exact for closed data. Refuses data whose closedness
/// residual exceeds `opts.tol_closed`.
pub fn integrate_immersion(alpha: &OneFormField, h: f64, opts: &IntegrateOptions) -> Result<Immersion> {
    let residual = closedness_residual(alpha);
    if !(residual <= opts.tol_closed) {
        return Err(Error::NotClosed {
            residual,
            tolerance: opts.tol_closed,
        });
    }
    let n = alpha.n();
    let nn = (n * n) as f64;
    let [gs, gt] = alpha.differential();
    let mean = |g: &[Vector3<f64>]| g.iter().sum::<Vector3<f64>>() / nn;
    let periods = [mean(&gs), mean(&gt)];

    let mut periodic = vec![Vector3::zeros(); n * n];
    for c in 0..3 {
        let mut hs: Vec<Complex64> = gs.iter().map(|v| Complex64::new(v[c], 0.0)).collect();
        let mut ht: Vec<Complex64> = gt.iter().map(|v| Complex64::new(v[c], 0.0)).collect();
        fft::forward(&mut hs, n);
        fft::forward(&mut ht, n);
        let mut hp = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for l in 0..n {
                let (m, k) = (fft::signed_index(j, n) as f64, fft::signed_index(l, n) as f64);
                let i = j * n + l;
                if m == 0.0 && k == 0.0 {
                    continue;
                }
                // minimizes |2πi m P̂ − Ĝ_s|² + |2πi k P̂ − Ĝ_t|²
                hp[i] = Complex64::new(0.0, -1.0) * (hs[i] * m + ht[i] * k) / (2.0 * PI * (m * m + k * k));
            }
        }
        fft::inverse(&mut hp, n);
        for i in 0..n * n {
            periodic[i][c] = hp[i].re;
        }
    }
    let origin = periodic[0];
    let points = (0..n * n)
        .map(|i| {
            let (s, t) = ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
            periods[0] * s + periods[1] * t + periodic[i] - origin
        })
        .collect();
    let mut imm = Immersion {
        lattice: *alpha.lattice(),
        n,
        points,
        periods,
        h,
        closedness: residual,
        branch_points: Vec::new(),
    };
    imm.branch_points = locate_branch_points(&imm, opts.zero_tol);
    Ok(imm)
}

/// Builds `α` from a critical solution and integrates with `H = λ`.
pub fn immersion_from_solution(sol: &Solution, opts: &IntegrateOptions) -> Result<Immersion> {
    if sol.p != 4.0 {
        return Err(Error::Domain(format!(
            "the Weierstrass data needs a solution of the critical equation (p = 4), got p = {}",
            sol.p
        )));
    }
    if sol.phi.max_abs() == 0.0 {
        return Err(Error::Degenerate("the spinor field vanishes identically".into()));
    }
    integrate_immersion(&build_alpha(&sol.phi), sol.lambda, opts)
}
