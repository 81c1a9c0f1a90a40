//! The functional
//!
//! ```text
//!   F_q(φ) = Re∫⟨Dφ, φ⟩ / ‖Dφ‖_q²,      q ∈ [4/3, 2],
//! ```
//!
//! its gradient, maximization, and the passage from a maximizer to a
//! solution of `Dφ = λ|φ|^{p−2}φ` with `1/p + 1/q = 1`.
//!
//! `F_q` is homogeneous of degree zero and blind to `ker D`, so the ascent
//! keeps iterates orthogonal to the kernel and rescales them to
//! `‖Dφ‖_q = 1` after every step. The search direction is `D⁺²G`: plain
//! gradient ascent in the variable `ψ = Dφ`, in which the problem is well
//! conditioned independently of the grid.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dirac::{apply_dirac, dirac_square_pinv, first_eigenspinor, project_out_kernel, random_band_limited};
use crate::error::{Error, Result};
use crate::geometry::{lambda1_plus, Lattice, SpinStructure};
use crate::nonlinear::Solution;
use crate::spinor::SpinorField;

/// `q_D = 2n/(n+1)` for `n = 2`.
pub const Q_CRITICAL: f64 = 4.0 / 3.0;

/// Relative size of `‖Dφ‖` below which a field counts as lying in `ker D`.
pub const TOL_DEGENERATE: f64 = 1e-10;

/// The Hölder dual `p = q/(q − 1)`.
pub fn dual_exponent(q: f64) -> f64 {
    q / (q - 1.0)
}

fn check_q(q: f64) -> Result<()> {
    if !(Q_CRITICAL - 1e-14..=2.0).contains(&q) {
        return Err(Error::Domain(format!("exponent q = {q} outside [4/3, 2]")));
    }
    Ok(())
}

/// `F_q` at a field, with the quantities its gradient needs.
#[derive(Debug, Clone)]
pub struct FunctionalState {
    q: f64,
    phi: SpinorField,
    dphi: SpinorField,
    numerator: Complex64,
    /// `∫|Dφ|^q`
    power_integral: f64,
    value: f64,
}

impl FunctionalState {
    pub fn new(phi: &SpinorField, q: f64) -> Result<Self> {
        check_q(q)?;
        let dphi = apply_dirac(phi);
        let scale = lambda1_plus(phi.lattice(), phi.spin()) * phi.l2_norm();
        if phi.l2_norm() == 0.0 || dphi.l2_norm() <= TOL_DEGENERATE * scale {
            return Err(Error::Degenerate("Dφ vanishes; the field lies in ker D".into()));
        }
        let numerator = dphi.inner(phi);
        let power_integral = dphi.lp_integral(q);
        let value = numerator.re / power_integral.powf(2.0 / q);
        Ok(Self {
            q,
            phi: phi.clone(),
            dphi,
            numerator,
            power_integral,
            value,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        dual_exponent(self.q)
    }

    pub fn phi(&self) -> &SpinorField {
        &self.phi
    }

    pub fn dirac_phi(&self) -> &SpinorField {
        &self.dphi
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `∫⟨Dφ, φ⟩` before taking the real part.
    pub fn numerator(&self) -> Complex64 {
        self.numerator
    }

    /// `‖Dφ‖_q`.
    pub fn dirac_norm(&self) -> f64 {
        self.power_integral.powf(1.0 / self.q)
    }

    /// `ρ = F_q(φ)·‖Dφ‖_q^{2−q}`.
    pub fn rho(&self) -> f64 {
        self.value * self.dirac_norm().powf(2.0 - self.q)
    }

    /// `φ − ρ|Dφ|^{q−2}Dφ`; the gradient is `(2/‖Dφ‖_q²)·D` of this.
    fn stationarity_defect(&self) -> SpinorField {
        self.phi
            .add_scaled(-self.rho(), &self.dphi.times_norm_power(self.q - 2.0))
    }

    /// The `L²` gradient `G` with `Re∫⟨G, ψ⟩ = dF_q(φ)ψ`.
    pub fn gradient(&self) -> SpinorField {
        let b = self.power_integral.powf(2.0 / self.q);
        apply_dirac(&self.stationarity_defect()).scaled_real(2.0 / b)
    }

    /// `F_q(φ + τd) − F_q(φ)` without cancellation; `dd = Dd`.
    fn increment(&self, d: &SpinorField, dd: &SpinorField, tau: f64) -> f64 {
        let q = self.q;
        let a = self.numerator.re;
        let delta_a = tau * (self.dphi.real_inner(d) + dd.real_inner(&self.phi)) + tau * tau * dd.real_inner(d);
        let mut delta_s = 0.0;
        for i in 0..self.phi.len() {
            let (ap, am) = (self.dphi.plus()[i], self.dphi.minus()[i]);
            let (hp, hm) = (dd.plus()[i], dd.minus()[i]);
            let x = ap.norm_sqr() + am.norm_sqr();
            let cross = (ap.conj() * hp + am.conj() * hm).re;
            let y = 2.0 * tau * cross + tau * tau * (hp.norm_sqr() + hm.norm_sqr());
            delta_s += if x == 0.0 {
                y.powf(q / 2.0)
            } else {
                x.powf(q / 2.0) * ((q / 2.0) * (y / x).ln_1p()).exp_m1()
            };
        }
        delta_s *= self.phi.cell_weight();
        let s = self.power_integral;
        let b = s.powf(2.0 / q);
        let delta_b = b * ((2.0 / q) * (delta_s / s).ln_1p()).exp_m1();
        (delta_a * b - a * delta_b) / (b * (b + delta_b))
    }
}

pub fn functional_fq(phi: &SpinorField, q: f64) -> Result<f64> {
    Ok(FunctionalState::new(phi, q)?.value())
}

pub fn grad_fq(phi: &SpinorField, q: f64) -> Result<SpinorField> {
    Ok(FunctionalState::new(phi, q)?.gradient())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximizeOptions {
    /// Stop when `‖G‖_{L²}` drops below this; `None` means `1e−8·N`.
    pub tol_grad: Option<f64>,
    pub max_iter: usize,
    /// Sufficient-increase constant of the backtracking test.
    pub armijo: f64,
    pub shrink: f64,
    /// Step growth after an accepted step.
    pub grow: f64,
    pub initial_step: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            tol_grad: None,
            max_iter: 5000,
            armijo: 1e-4,
            shrink: 0.5,
            grow: 2.0,
            initial_step: 1.0,
        }
    }
}

impl MaximizeOptions {
    pub fn tol_for(&self, n: usize) -> f64 {
        self.tol_grad.unwrap_or(1e-8 * n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol_grad.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::config("maximize.tol_grad", "must be positive"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::config("maximize.armijo", "must lie in (0, 1)"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::config("maximize.shrink", "must lie in (0, 1)"));
        }
        if !(self.grow >= 1.0) || !(self.initial_step > 0.0) {
            return Err(Error::config("maximize.grow", "growth must be ≥ 1 and the initial step positive"));
        }
        Ok(())
    }
}

/// Result of [`maximize_fq`]: a stationary, locally maximal point. Global
/// maximality is not established.
#[derive(Debug, Clone)]
pub struct Maximizer {
    /// Normalized to `‖Dφ‖_q = 1` and orthogonal to `ker D`.
    pub phi: SpinorField,
    /// `F_q(φ)`, the estimate of `μ_q`.
    pub mu: f64,
    pub q: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// `F_q` after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

fn normalize_dirac(phi: &SpinorField, q: f64) -> SpinorField {
    phi.scaled_real(1.0 / apply_dirac(phi).lp_norm(q))
}

/// Sobolev-preconditioned gradient ascent with backtracking on `F_q`.
pub fn maximize_fq(init: &SpinorField, q: f64, opts: &MaximizeOptions) -> Result<Maximizer> {
    check_q(q)?;
    if q <= Q_CRITICAL {
        return Err(Error::Domain("maximization needs q > 4/3".into()));
    }
    opts.validate()?;
    let tol = opts.tol_for(init.n());
    let start = project_out_kernel(init);
    FunctionalState::new(&start, q)?;
    let mut state = FunctionalState::new(&normalize_dirac(&start, q), q)?;
    let mut history = vec![state.value()];
    let mut tau = opts.initial_step;
    let mut grad = state.gradient();
    let mut grad_norm = grad.l2_norm();
    let mut iterations = 0;

    while grad_norm >= tol {
        if iterations == opts.max_iter {
            return Err(Error::IterationLimit {
                iterations,
                grad_norm,
                value: state.value(),
                best: Box::new(state.phi().clone()),
            });
        }
        iterations += 1;
        let dir = dirac_square_pinv(&grad);
        let ddir = apply_dirac(&dir);
        let slope = grad.real_inner(&dir);
        let mut accepted = None;
        while tau > 1e-14 * opts.initial_step {
            let inc = state.increment(&dir, &ddir, tau);
            if inc >= opts.armijo * tau * slope {
                accepted = Some(tau);
                break;
            }
            tau *= opts.shrink;
        }
        let Some(step) = accepted else {
            // no representable increase left along the ascent direction
            return Err(Error::IterationLimit {
                iterations,
                grad_norm,
                value: state.value(),
                best: Box::new(state.phi().clone()),
            });
        };
        let next = normalize_dirac(&state.phi().add_scaled(step, &dir), q);
        state = FunctionalState::new(&next, q)?;
        history.push(state.value());
        grad = state.gradient();
        grad_norm = grad.l2_norm();
        tau = step * opts.grow;
    }
    Ok(Maximizer {
        phi: state.phi().clone(),
        mu: state.value(),
        q,
        iterations,
        grad_norm,
        history,
    })
}

/// A solution obtained from a maximizer, plus the number of grid points where
/// `Dφ` vanished and the `0^{q−2}·0 = 0` convention was applied.
#[derive(Debug, Clone)]
pub struct EulerLagrange {
    pub solution: Solution,
    pub vanishing_points: usize,
}

/// Turns a maximizer of `F_q` into `φ` with `Dφ = μ_q⁻¹|φ|^{p−2}φ` and
/// `‖φ‖_p = 1`.
///
/// With `ψ = Dφ_max` scaled to `‖ψ‖_q = 1`, stationarity reads
/// `D(φ_max − μ|ψ|^{q−2}ψ) = 0`. Put `φ = |ψ|^{q−2}ψ`. Since
/// `(q−1)(p−2) = 2−q`, `|φ|^{p−2}φ = ψ`, so `Dφ = μ⁻¹ψ = μ⁻¹|φ|^{p−2}φ`,
/// and `∫|φ|^p = ∫|ψ|^q = 1`.
pub fn normalize_euler_lagrange(phi_max: &SpinorField, q: f64, mu: f64) -> Result<EulerLagrange> {
    check_q(q)?;
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("μ_q must be positive, got {mu}")));
    }
    let p = dual_exponent(q);
    let dphi = apply_dirac(phi_max);
    let norm = dphi.lp_norm(q);
    if norm == 0.0 {
        return Err(Error::Degenerate("Dφ vanishes identically".into()));
    }
    let psi = dphi.scaled_real(1.0 / norm);
    let vanishing_points = if q < 2.0 {
        (0..psi.len()).filter(|&i| psi.norm_sqr_at(i) == 0.0).count()
    } else {
        0
    };
    let phi = psi.times_norm_power(q - 2.0);
    // remove round-off in the norm along the exact family u → su
    let s = 1.0 / phi.lp_norm(p);
    let lambda = s.powf(2.0 - p) / mu;
    Ok(EulerLagrange {
        solution: Solution::evaluate(phi.scaled_real(s), lambda, p),
        vanishing_points,
    })
}

/// The first eigenspinor plus a band-limited perturbation of relative `L²`
/// size `eps`; the perturbation breaks symmetries that can pin the ascent to
/// a saddle.
pub fn perturbed_start(
    lat: &Lattice,
    spin: SpinStructure,
    n: usize,
    eps: f64,
    seed: u64,
) -> Result<SpinorField> {
    let (base, _) = first_eigenspinor(lat, spin, n)?;
    if eps == 0.0 {
        return Ok(base);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = project_out_kernel(&random_band_limited(lat, spin, n, 3, &mut rng)?);
    let scale = eps * base.l2_norm() / noise.l2_norm();
    Ok(base.add_scaled(scale, &noise))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MuCurveOptions {
    pub maximize: MaximizeOptions,
    /// Relative size of the initial perturbation.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for MuCurveOptions {
    fn default() -> Self {
        Self {
            maximize: MaximizeOptions::default(),
            perturbation: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRow {
    pub q: f64,
    /// Best value of `F_q` reached.
    pub mu: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub error: Option<String>,
}

/// `μ_q` on the torus rescaled to unit area, swept in descending `q` with
/// warm starts; the table is returned in ascending `q`. A failed entry keeps
/// its best value, records the error and the sweep continues from there.
pub fn mu_curve(
    lat: &Lattice,
    spin: SpinStructure,
    n: usize,
    q_values: &[f64],
    opts: &MuCurveOptions,
) -> Result<Vec<MuRow>> {
    for &q in q_values {
        check_q(q)?;
        if q <= Q_CRITICAL {
            return Err(Error::Domain("mu_curve needs every q > 4/3".into()));
        }
    }
    let unit = lat.with_unit_area();
    let mut order: Vec<f64> = q_values.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    let mut current = perturbed_start(&unit, spin, n, opts.perturbation, opts.seed)?;
    let mut rows = Vec::with_capacity(order.len());
    for q in order {
        let row = match maximize_fq(&current, q, &opts.maximize) {
            Ok(m) => {
                current = m.phi;
                MuRow {
                    q,
                    mu: m.mu,
                    iterations: m.iterations,
                    grad_norm: m.grad_norm,
                    converged: true,
                    error: None,
                }
            }
            Err(e @ Error::IterationLimit { .. }) => {
                let message = e.to_string();
                let Error::IterationLimit {
                    iterations,
                    grad_norm,
                    value,
                    best,
                } = e
                else {
                    unreachable!()
                };
                current = *best;
                MuRow {
                    q,
                    mu: value,
                    iterations,
                    grad_norm,
                    converged: false,
                    error: Some(message),
                }
            }
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    rows.reverse();
    Ok(rows)
}
