//! The nonlinear Dirac equation `Dφ = λ|φ|^{p−2}φ`, `‖φ‖_p = 1`, solved by
//! damped Newton iteration and continued in `p` from the linear case `p = 2`
//! to the critical exponent `p = 4`.
//!
//! The nonlinearity is only real-differentiable, so the Newton system is posed
//! on real coordinates. In normalized mode `λ` is an extra unknown and the
//! constraint `(∫|φ|^p − 1)/p = 0` borders the Jacobian:
//!
//! ```text
//!   ( D − λ N(φ)   −|φ|^{p−2}φ ) (δφ)     ( Dφ − λ|φ|^{p−2}φ )
//!   ( ⟨|φ|^{p−2}φ, ·⟩     0    ) (δλ) = − ( (∫|φ|^p − 1)/p    )
//! ```
//!
//! with `N(φ)ψ = |φ|^{p−2}ψ + (p−2)|φ|^{p−4} Re⟨φ, ψ⟩ φ`. Linear solves use
//! GMRES preconditioned by `(|D| + c)⁻¹`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirac::{abs_dirac_shifted_inverse, apply_dirac, first_eigenspinor, project_out_kernel};
use crate::error::{Error, Result};
use crate::geometry::{lambda1_plus, Lattice, SpinStructure};
use crate::krylov::{gmres, GmresOptions};
use crate::spinor::{SpinorField, SpinorFile};

/// Exponents visited by the default continuation.
pub const DEFAULT_P_VALUES: [f64; 7] = [2.0, 2.5, 3.0, 3.5, 3.8, 3.95, 4.0];

/// The critical exponent in dimension two.
pub const P_CRITICAL: f64 = 4.0;

/// One row of the continuation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub p: f64,
    pub lambda: f64,
    pub sup_norm: f64,
    pub residual: f64,
    pub newton_iterations: usize,
}

/// A solution `(φ, λ)` of `Dφ = λ|φ|^{p−2}φ` with its measured residual.
#[derive(Debug, Clone)]
pub struct Solution {
    pub phi: SpinorField,
    pub lambda: f64,
    pub p: f64,
    /// `‖Dφ − λ|φ|^{p−2}φ‖_{L²}`.
    pub residual: f64,
    /// `‖φ‖_p`.
    pub norm_p: f64,
    pub trace: Vec<TracePoint>,
}

impl Solution {
    /// Packages `(φ, λ)` and measures residual and norm.
    pub fn evaluate(phi: SpinorField, lambda: f64, p: f64) -> Solution {
        let residual = residual_field(&phi, lambda, p).l2_norm();
        let norm_p = phi.lp_norm(p);
        Solution {
            phi,
            lambda,
            p,
            residual,
            norm_p,
            trace: Vec::new(),
        }
    }

    /// `Re∫⟨Dφ, φ⟩ / ∫|φ|^p`, which equals `λ` on exact solutions.
    pub fn lambda_quotient(&self) -> f64 {
        apply_dirac(&self.phi).real_inner(&self.phi) / self.phi.lp_integral(self.p)
    }

    pub fn to_file(&self) -> SolutionFile {
        SolutionFile {
            format: SOLUTION_FORMAT.to_string(),
            version: 1,
            field: self.phi.to_file(),
            lambda: self.lambda,
            p: self.p,
            residual: self.residual,
            trace: self.trace.clone(),
        }
    }

    /// Rebuilds from a container; residual and norm are re-measured.
    pub fn from_file(file: &SolutionFile) -> Result<Solution> {
        let phi = SpinorField::from_file(&file.field)?;
        let mut sol = Solution::evaluate(phi, file.lambda, file.p);
        sol.trace = file.trace.clone();
        Ok(sol)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file()).expect("solution file serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Solution> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SolutionFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if file.format != SOLUTION_FORMAT {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                reason: format!("expected format `{SOLUTION_FORMAT}`, found `{}`", file.format),
            });
        }
        Solution::from_file(&file)
    }
}

pub const SOLUTION_FORMAT: &str = "torus-dirac/solution";

/// JSON container: the spinor container plus `λ`, `p`, residual and trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format: String,
    pub version: u32,
    pub field: SpinorFile,
    pub lambda: f64,
    pub p: f64,
    pub residual: f64,
    pub trace: Vec<TracePoint>,
}

/// `Dφ − λ|φ|^{p−2}φ`.
pub fn residual_field(phi: &SpinorField, lambda: f64, p: f64) -> SpinorField {
    let mut out = apply_dirac(phi);
    out.axpy(-lambda, &phi.times_norm_power(p - 2.0));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// `λ` is held at the given value and `‖φ‖_p` is free.
    Fixed(f64),
    /// `λ` is an unknown and `‖φ‖_p = 1` is imposed.
    Normalized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    /// Residual target; `None` means `1e−9·N`.
    pub tol_solve: Option<f64>,
    pub tol_norm: f64,
    pub max_iter: usize,
    /// Smallest damping factor tried before giving up.
    pub min_damping: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub gmres_rtol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol_solve: None,
            tol_norm: 1e-10,
            max_iter: 60,
            min_damping: 1.0 / 1024.0,
            gmres_restart: 80,
            gmres_max_iter: 2000,
            gmres_rtol: 1e-11,
        }
    }
}

impl NewtonOptions {
    pub fn tol_for(&self, n: usize) -> f64 {
        self.tol_solve.unwrap_or(1e-9 * n as f64)
    }
}

/// Continuation exponents plus the per-step Newton settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub newton: NewtonOptions,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self {
            p_values: DEFAULT_P_VALUES.to_vec(),
            newton: NewtonOptions::default(),
        }
    }
}

impl ContinuationSchedule {
    pub fn new(p_values: Vec<f64>, newton: NewtonOptions) -> Result<Self> {
        let s = Self { p_values, newton };
        s.validate()?;
        Ok(s)
    }

    /// First entry 2, last entry 4, strictly increasing, positive tolerances.
    pub fn validate(&self) -> Result<()> {
        let ps = &self.p_values;
        if ps.first() != Some(&2.0) || ps.last() != Some(&P_CRITICAL) {
            return Err(Error::config("schedule.p_values", "must start at 2 and end at 4"));
        }
        if ps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("schedule.p_values", "must be strictly increasing"));
        }
        let nw = &self.newton;
        if nw.tol_solve.is_some_and(|t| !(t > 0.0)) || !(nw.tol_norm > 0.0) || !(nw.gmres_rtol > 0.0) {
            return Err(Error::config("schedule.newton", "tolerances must be positive"));
        }
        if !(nw.min_damping > 0.0 && nw.min_damping <= 1.0) {
            return Err(Error::config("schedule.newton.min_damping", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Pointwise data of the linearization at `u`: `|u|^{p−2}` and `u/|u|`.
struct Linearization {
    power: Vec<f64>,
    unit_plus: Vec<Complex64>,
    unit_minus: Vec<Complex64>,
}

impl Linearization {
    fn at(u: &SpinorField, p: f64) -> Self {
        let len = u.len();
        let mut power = Vec::with_capacity(len);
        let mut unit_plus = Vec::with_capacity(len);
        let mut unit_minus = Vec::with_capacity(len);
        for i in 0..len {
            let r = u.norm_sqr_at(i).sqrt();
            if r == 0.0 {
                power.push(if p == 2.0 { 1.0 } else { 0.0 });
                unit_plus.push(Complex64::new(0.0, 0.0));
                unit_minus.push(Complex64::new(0.0, 0.0));
            } else {
                power.push(r.powf(p - 2.0));
                unit_plus.push(u.plus()[i] / r);
                unit_minus.push(u.minus()[i] / r);
            }
        }
        Self {
            power,
            unit_plus,
            unit_minus,
        }
    }

    /// `N(u)ψ` from the module docs.
    fn apply(&self, psi: &SpinorField, p: f64) -> SpinorField {
        let mut out = psi.clone();
        let (op, om) = out.components_mut();
        for i in 0..op.len() {
            let (ep, em) = (self.unit_plus[i], self.unit_minus[i]);
            let along = (ep.conj() * op[i] + em.conj() * om[i]).re;
            let m = self.power[i];
            op[i] = m * (op[i] + (p - 2.0) * along * ep);
            om[i] = m * (om[i] + (p - 2.0) * along * em);
        }
        out
    }
}

/// Damped Newton solve of `Dφ = λ|φ|^{p−2}φ` at one exponent.
///
/// In normalized mode `init` is first scaled to `‖φ‖_p = 1` and, unless
/// `lambda0` is given, `λ` starts at the quotient `Re∫⟨Dφ,φ⟩ / ∫|φ|^p`. At
/// `p = 2` iterates are kept orthogonal to `ker D`.
pub fn solve_at_exponent(
    p: f64,
    mode: LambdaMode,
    init: &SpinorField,
    lambda0: Option<f64>,
    opts: &NewtonOptions,
) -> Result<Solution> {
    if !(2.0..=P_CRITICAL).contains(&p) {
        return Err(Error::Domain(format!("exponent p = {p} outside [2, 4]")));
    }
    let fail = |reason: String| Error::ContinuationStep {
        p,
        reason,
        trace: Vec::new(),
    };
    let linear = p == 2.0;
    let mut u = if linear { project_out_kernel(init) } else { init.clone() };
    if u.l2_norm() == 0.0 {
        return Err(Error::Degenerate(
            "initial field vanishes (after removing its kernel component)".into(),
        ));
    }
    let normalized = mode == LambdaMode::Normalized;
    let mut lambda = match mode {
        LambdaMode::Fixed(l) => l,
        LambdaMode::Normalized => {
            u = u.scaled_real(1.0 / u.lp_norm(p));
            lambda0.unwrap_or_else(|| apply_dirac(&u).real_inner(&u) / u.lp_integral(p))
        }
    };

    let n = u.n();
    let tol = opts.tol_for(n);
    let weight = u.cell_weight();
    let lat = *u.lattice();
    let shift_floor = lambda1_plus(&lat, u.spin()).max(1.0 / lat.area().sqrt());
    let constraint = |u: &SpinorField| if normalized { (u.lp_integral(p) - 1.0) / p } else { 0.0 };
    let merit = |r: &SpinorField, c: f64| r.real_inner(r) + c * c;

    let mut r = residual_field(&u, lambda, p);
    let mut c = constraint(&u);
    let mut iterations = 0;
    loop {
        let rn = r.l2_norm();
        // the final rescaling u → su multiplies the residual by s
        let scale = if normalized { u.lp_norm(p).recip() } else { 1.0 };
        if rn * scale <= tol {
            break;
        }
        if iterations == opts.max_iter {
            return Err(fail(format!(
                "Newton did not converge in {iterations} iterations (residual {rn:.3e}, target {tol:.3e})"
            )));
        }
        iterations += 1;

        let lin = Linearization::at(&u, p);
        let g = u.times_norm_power(p - 2.0);
        let g_vec = g.to_real_vec();
        let dim = g_vec.len();
        let extra = usize::from(normalized);
        let template = u.clone();
        let jac = |x: &[f64]| -> Vec<f64> {
            let du = template.with_real_vec(&x[..dim]);
            let mut y = apply_dirac(&du);
            y.axpy(-lambda, &lin.apply(&du, p));
            let mut out = y.to_real_vec();
            if normalized {
                let dl = x[dim];
                out.iter_mut().zip(&g_vec).for_each(|(o, gi)| *o -= dl * gi);
                out.push(g_vec.iter().zip(&x[..dim]).map(|(a, b)| a * b).sum::<f64>() * weight);
            }
            out
        };
        let shift = shift_floor.max(lambda.abs() * lin.power.iter().fold(0.0f64, |a, &b| a.max(b)));
        let precond = |x: &[f64]| -> Vec<f64> {
            let v = template.with_real_vec(&x[..dim]);
            let mut out = abs_dirac_shifted_inverse(&v, shift).to_real_vec();
            if normalized {
                out.push(x[dim]);
            }
            out
        };
        let mut rhs: Vec<f64> = r.to_real_vec().iter().map(|v| -v).collect();
        if normalized {
            rhs.push(-c);
        }
        debug_assert_eq!(rhs.len(), dim + extra);
        let gm = GmresOptions {
            restart: opts.gmres_restart,
            max_iter: opts.gmres_max_iter,
            rtol: opts.gmres_rtol,
        };
        let step = gmres(jac, precond, &rhs, &gm);
        let mut du = template.with_real_vec(&step.x[..dim]);
        if linear {
            du = project_out_kernel(&du);
        }
        let dl = if normalized { step.x[dim] } else { 0.0 };

        let m0 = merit(&r, c);
        let mut alpha = 1.0;
        loop {
            let trial_u = u.add_scaled(alpha, &du);
            let trial_l = lambda + alpha * dl;
            let trial_r = residual_field(&trial_u, trial_l, p);
            let trial_c = constraint(&trial_u);
            if merit(&trial_r, trial_c) < (1.0 - 1e-4 * alpha) * m0 {
                u = trial_u;
                lambda = trial_l;
                r = trial_r;
                c = trial_c;
                break;
            }
            alpha /= 2.0;
            if alpha < opts.min_damping {
                return Err(fail(format!(
                    "damped Newton stalled at residual {rn:.3e} (linear solve residual {:.1e}); \
                     the Jacobian may be singular along kernel directions, try perturbing the initial field",
                    step.residual
                )));
            }
        }
    }

    if normalized {
        // exact renormalization: u → su maps λ to λ·s^{2−p}
        let s = 1.0 / u.lp_norm(p);
        u = u.scaled_real(s);
        lambda *= s.powf(2.0 - p);
        let norm_err = (u.lp_norm(p) - 1.0).abs();
        if norm_err > opts.tol_norm {
            return Err(fail(format!("normalization error {norm_err:.1e} exceeds {:.1e}", opts.tol_norm)));
        }
        if !(lambda > 0.0) {
            return Err(fail(format!("converged to a nonpositive eigenvalue λ = {lambda}")));
        }
    }
    let mut sol = Solution::evaluate(u, lambda, p);
    sol.trace.push(TracePoint {
        p,
        lambda,
        sup_norm: sol.phi.max_abs(),
        residual: sol.residual,
        newton_iterations: iterations,
    });
    Ok(sol)
}

/// Continues `solve_at_exponent` along the schedule with warm starts and
/// returns the critical (`p = 4`) solution with the full trace. Without an
/// initial field the constant-length first eigenspinor is used.
pub fn solve_critical(
    lat: &Lattice,
    spin: SpinStructure,
    n: usize,
    schedule: &ContinuationSchedule,
    init: Option<&SpinorField>,
) -> Result<Solution> {
    schedule.validate()?;
    let start = match init {
        Some(f) => {
            if f.n() != n || f.lattice() != lat || f.spin() != spin {
                return Err(Error::GridMismatch(
                    "initial field does not match the requested torus and grid".into(),
                ));
            }
            f.clone()
        }
        None => first_eigenspinor(lat, spin, n)?.0,
    };
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut current = start;
    let mut last = None;
    for &p in &schedule.p_values {
        match solve_at_exponent(p, LambdaMode::Normalized, &current, None, &schedule.newton) {
            Ok(sol) => {
                trace.extend(sol.trace.iter().copied());
                current = sol.phi.clone();
                last = Some(sol);
            }
            Err(e) => {
                let reason = match e {
                    Error::ContinuationStep { reason, .. } => reason,
                    other => other.to_string(),
                };
                return Err(Error::ContinuationStep {
                    p,
                    reason,
                    trace: trace.iter().map(|t| (t.p, t.lambda, t.sup_norm)).collect(),
                });
            }
        }
    }
    let mut sol = last.expect("schedule is nonempty");
    sol.trace = trace;
    Ok(sol)
}
