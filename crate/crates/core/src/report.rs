//! Run configuration, JSON reports and the command drivers behind the CLI.
//!
//! Reports are deterministic: no timings, no absolute paths, floats written in
//! shortest round-trip form.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::check::{Check, CheckReport};
use crate::dirac::{dirac_spectrum_numeric, mode_table, DENSE_GRID_CAP};
use crate::error::{Error, Result};
use crate::geometry::{closed_form_spectrum, group_values, lambda1_plus, sphere_lambda_min, Lattice, SpinStructure};
use crate::nonlinear::{solve_at_exponent, solve_critical, ContinuationSchedule, LambdaMode, Solution, P_CRITICAL};
use crate::spinor::SpinorField;
use crate::variational::{mu_curve, perturbed_start, MaximizeOptions, MuCurveOptions, MuRow, Q_CRITICAL};
use crate::weierstrass::{
    count_zeros, export_mesh, immersion_from_solution, verify_immersion, BranchPoint, IntegrateOptions,
    VerifyOptions, ZeroReport,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const VERDICT_BELOW: &str = "below 2√π: minimizer regime";
pub const VERDICT_NOT_MET: &str = "threshold not met; existence theorem hypothesis fails";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            v1: [1.0, 0.0],
            v2: [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Eigenvalues of smallest modulus to list, with multiplicity.
    pub count: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { count: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuCurveConfig {
    pub q_values: Vec<f64>,
    pub perturbation: f64,
    pub maximize: MaximizeOptions,
}

impl Default for MuCurveConfig {
    fn default() -> Self {
        Self {
            q_values: vec![1.4, 1.5, 1.6, 1.8, 2.0],
            perturbation: 1e-3,
            maximize: MaximizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Relative size of the random perturbation added to the first
    /// eigenspinor before continuation; `0` starts from the eigenspinor.
    pub perturbation: f64,
    pub schedule: ContinuationSchedule,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            perturbation: 0.0,
            schedule: ContinuationSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub copies: [usize; 2],
    pub integrate: IntegrateOptions,
    pub verify: VerifyOptions,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            copies: [1, 1],
            integrate: IntegrateOptions::default(),
            verify: VerifyOptions::default(),
        }
    }
}

/// Everything a run needs. Read from TOML, or JSON when the file ends in
/// `.json`; absent keys take their defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: usize,
    /// Holonomy signs along the two generators.
    pub spin: [i32; 2],
    pub seed: u64,
    pub output: PathBuf,
    pub lattice: LatticeConfig,
    pub spectrum: SpectrumConfig,
    pub mu_curve: MuCurveConfig,
    pub solve: SolveConfig,
    pub surface: SurfaceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: 32,
            spin: [1, -1],
            seed: 0,
            output: PathBuf::from("out"),
            lattice: LatticeConfig::default(),
            spectrum: SpectrumConfig::default(),
            mu_curve: MuCurveConfig::default(),
            solve: SolveConfig::default(),
            surface: SurfaceConfig::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text, path)?
        } else {
            Self::from_toml_str(&text, path)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid;
        if !n.is_multiple_of(2) || !(4..=512).contains(&n) {
            return Err(Error::config("grid", format!("must be even and within [4, 512], got {n}")));
        }
        self.lattice()?;
        self.spin_structure()?;
        if self.spectrum.count == 0 {
            return Err(Error::config("spectrum.count", "must be at least 1"));
        }
        let mc = &self.mu_curve;
        if let Some(&q) = mc.q_values.iter().find(|&&q| !(q > Q_CRITICAL && q <= 2.0)) {
            return Err(Error::config("mu_curve.q_values", format!("every q must lie in (4/3, 2], got {q}")));
        }
        if !(mc.perturbation >= 0.0) || !(self.solve.perturbation >= 0.0) {
            return Err(Error::config("perturbation", "must be non-negative"));
        }
        mc.maximize.validate()?;
        self.solve.schedule.validate()?;
        let s = &self.surface;
        if s.copies.contains(&0) {
            return Err(Error::config("surface.copies", "tiling counts must be at least 1"));
        }
        positive("surface.integrate.tol_closed", s.integrate.tol_closed)?;
        positive("surface.integrate.zero_tol", s.integrate.zero_tol)?;
        let v = &s.verify;
        positive("surface.verify.conformality_tol", v.conformality_tol)?;
        positive("surface.verify.tol_closed", v.tol_closed)?;
        positive("surface.verify.cmc_tol", v.cmc_tol)?;
        positive("surface.verify.flat_tol", v.flat_tol)?;
        positive("surface.verify.period_tol", v.period_tol)?;
        positive("surface.verify.area_tol", v.area_tol)?;
        if !(v.exclusion_cells >= 0.0) {
            return Err(Error::config("surface.verify.exclusion_cells", "must be non-negative"));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lattice.v1, self.lattice.v2).map_err(|e| Error::config("lattice", e.to_string()))
    }

    pub fn spin_structure(&self) -> Result<SpinStructure> {
        SpinStructure::from_signs(self.spin[0], self.spin[1])
            .map_err(|_| Error::config("spin", format!("signs must be ±1, got {:?}", self.spin)))
    }
}

/// `λ√area` against `λ_min⁺(S²) = 2√π`; `below` is the strict inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub lambda_sqrt_area: f64,
    pub threshold: f64,
    pub below: bool,
    pub verdict: String,
}

pub fn threshold_verdict(lambda_sqrt_area: f64) -> ThresholdVerdict {
    let threshold = sphere_lambda_min(2).expect("n = 2 is valid");
    let below = lambda_sqrt_area < threshold;
    ThresholdVerdict {
        lambda_sqrt_area,
        threshold,
        below,
        verdict: if below { VERDICT_BELOW } else { VERDICT_NOT_MET }.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub area: f64,
    pub lambda1_plus: f64,
    pub lambda1_plus_sqrt_area: f64,
    /// Complex dimension of `ker D`.
    pub kernel_dimension: usize,
    /// `(value, complex multiplicity)`.
    pub closed_form: Vec<(f64, usize)>,
    pub numeric: Vec<(f64, usize)>,
    /// `"dense"` for the assembled matrix, `"symbol"` for the Fourier symbol
    /// on grids too large to assemble.
    pub numeric_method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCurveSummary {
    /// The table is computed on the torus rescaled to unit area.
    pub rows: Vec<MuRow>,
    pub tol_grad: f64,
    /// `1/(λ₁⁺√area)`, the value of `μ₂`.
    pub mu2_dual: f64,
    /// The ascent finds stationary, locally maximal points only.
    pub maximality: String,
}

/// The generalized metric `|φ|⁴g₀` of the solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactor {
    pub exponent: f64,
    pub min: f64,
    pub max: f64,
    /// `∫|φ|⁴ / area`.
    pub mean: f64,
    /// Area of the generalized metric, `∫|φ|⁴`.
    pub area: f64,
}

impl ConformalFactor {
    pub fn of(phi: &SpinorField) -> Self {
        let f: Vec<f64> = phi.pointwise_norms().iter().map(|r| r.powi(4)).collect();
        let area = phi.lp_integral(4.0);
        Self {
            exponent: 4.0,
            min: f.iter().copied().fold(f64::INFINITY, f64::min),
            max: f.iter().copied().fold(0.0, f64::max),
            mean: area / phi.lattice().area(),
            area,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub lambda: f64,
    pub p: f64,
    /// `λ‖φ‖₄²`, invariant under `φ ↦ sφ`; equals `λ₁⁺√area` on
    /// constant-length solutions.
    pub lambda_sqrt_area: f64,
    pub residual: Check,
    pub norm_p: f64,
    pub min_abs: f64,
    pub max_abs: f64,
    pub trace: Vec<crate::nonlinear::TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    #[serde(rename = "H")]
    pub h: f64,
    pub periods: [[f64; 3]; 2],
    pub area: f64,
    pub closedness: f64,
    pub branch_points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub grid: usize,
    pub lattice: LatticeConfig,
    pub spin: [i32; 2],
    pub threshold: ThresholdVerdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spectrum: Option<SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu_curve: Option<MuCurveSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solution: Option<SolutionSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conformal_factor: Option<ConformalFactor>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zeros: Option<ZeroReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub surface: Option<SurfaceSummary>,
    pub checks: CheckReport,
    pub files: Vec<String>,
}

impl RunReport {
    fn new(command: &str, cfg: &RunConfig, lambda_sqrt_area: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed: cfg.seed,
            grid: cfg.grid,
            lattice: cfg.lattice.clone(),
            spin: cfg.spin,
            threshold: threshold_verdict(lambda_sqrt_area),
            spectrum: None,
            mu_curve: None,
            solution: None,
            conformal_factor: None,
            zeros: None,
            surface: None,
            checks: CheckReport::default(),
            files: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<report>"),
            reason: e.to_string(),
        })
    }

    /// Writes the report as `name` under the output directory and records it.
    pub fn write(&mut self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        self.files.push(path.display().to_string());
        fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Closed-form and discretized spectra with `λ₁⁺√area` and `dim ker D`.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let lat = cfg.lattice()?;
    let spin = cfg.spin_structure()?;
    let l1 = lambda1_plus(&lat, spin);
    let closed = closed_form_spectrum(&lat, spin, cfg.spectrum.count);
    let count: usize = closed.iter().map(|(_, m)| m).sum();
    let (numeric_values, method) = if cfg.grid <= DENSE_GRID_CAP {
        let pairs = dirac_spectrum_numeric(&lat, spin, cfg.grid, count.min(2 * cfg.grid * cfg.grid))?;
        (pairs.into_iter().map(|p| p.value).collect::<Vec<_>>(), "dense")
    } else {
        let mut v: Vec<f64> = mode_table(&lat, spin, cfg.grid)
            .iter()
            .flat_map(|m| [m.frequency(), -m.frequency()])
            .collect();
        v.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        v.truncate(count);
        (v, "symbol")
    };
    let numeric = group_values(numeric_values);
    let kernel_dimension = closed.iter().find(|(v, _)| *v == 0.0).map_or(0, |(_, m)| *m);

    let mut report = RunReport::new("spectrum", cfg, l1 * lat.area().sqrt());
    let worst = closed
        .iter()
        .zip(&numeric)
        .map(|((a, ma), (b, mb))| {
            if ma != mb {
                f64::INFINITY
            } else {
                (a - b).abs() / a.abs().max(1.0)
            }
        })
        .fold(0.0, f64::max);
    let agree = if closed.len() == numeric.len() { worst } else { f64::INFINITY };
    // the cut of the closed-form list can straddle a group the grid resolves
    // differently; only the listed groups are compared
    report.checks.push(Check::at_most("spectrum_agreement", agree, 1e-8));
    report.spectrum = Some(SpectrumSummary {
        area: lat.area(),
        lambda1_plus: l1,
        lambda1_plus_sqrt_area: l1 * lat.area().sqrt(),
        kernel_dimension,
        closed_form: closed,
        numeric,
        numeric_method: method.to_string(),
    });
    Ok(report)
}

/// `μ_q` table on the unit-area rescaling with a monotonicity check.
pub fn cmd_mu_curve(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let lat = cfg.lattice()?;
    let spin = cfg.spin_structure()?;
    let mc = &cfg.mu_curve;
    let opts = MuCurveOptions {
        maximize: mc.maximize.clone(),
        perturbation: mc.perturbation,
        seed: cfg.seed,
    };
    let rows = mu_curve(&lat, spin, cfg.grid, &mc.q_values, &opts)?;
    let tol_grad = mc.maximize.tol_for(cfg.grid);
    let l1a = lambda1_plus(&lat, spin) * lat.area().sqrt();

    let mut report = RunReport::new("mu-curve", cfg, l1a);
    let rise = rows.windows(2).map(|w| w[1].mu - w[0].mu).fold(0.0, f64::max);
    report.checks.push(Check::at_most("mu_non_increasing", rise, 2.0 * tol_grad));
    let failed = rows.iter().filter(|r| !r.converged).count();
    report.checks.push(Check::at_most("mu_rows_converged", failed as f64, 0.0));
    report.mu_curve = Some(MuCurveSummary {
        rows,
        tol_grad,
        mu2_dual: 1.0 / l1a,
        maximality: "stationary and locally maximal; global maximality not established".to_string(),
    });
    Ok(report)
}

fn solution_report(command: &str, cfg: &RunConfig, sol: &Solution, tol_solve: f64) -> RunReport {
    let lambda_sqrt_area = sol.lambda * sol.norm_p.powi(2);
    let mut report = RunReport::new(command, cfg, lambda_sqrt_area);
    let residual = Check::at_most("residual", sol.residual, tol_solve);
    report.checks.push(residual.clone());
    let norm_tol = cfg.solve.schedule.newton.tol_norm;
    report.checks.push(Check::at_most("norm_p", (sol.norm_p - 1.0).abs(), norm_tol));
    let zeros = count_zeros(&sol.phi, lambda_sqrt_area, 1, cfg.surface.integrate.zero_tol);
    report
        .checks
        .push(Check::at_most("nodal_bound", zeros.weighted_count as f64, zeros.bound));
    report.solution = Some(SolutionSummary {
        lambda: sol.lambda,
        p: sol.p,
        lambda_sqrt_area,
        residual,
        norm_p: sol.norm_p,
        min_abs: sol.phi.min_abs(),
        max_abs: sol.phi.max_abs(),
        trace: sol.trace.clone(),
    });
    report.conformal_factor = Some(ConformalFactor::of(&sol.phi));
    report.zeros = Some(zeros);
    report
}

fn check_solution_matches(cfg: &RunConfig, sol: &Solution) -> Result<()> {
    if sol.phi.n() != cfg.grid || *sol.phi.lattice() != cfg.lattice()? || sol.phi.spin() != cfg.spin_structure()? {
        return Err(Error::GridMismatch(
            "the saved solution does not match the configured torus and grid".into(),
        ));
    }
    Ok(())
}

/// Continuation to `p = 4`. With `resume`, the saved solution is polished at
/// its exponent and continued through the remaining schedule instead.
/// Writes `solution.json`, `metric_factor.json` and `solve-report.json`.
pub fn cmd_solve(cfg: &RunConfig, resume: Option<&Path>) -> Result<(RunReport, Solution)> {
    cfg.validate()?;
    let lat = cfg.lattice()?;
    let spin = cfg.spin_structure()?;
    let schedule = &cfg.solve.schedule;
    let sol = match resume {
        Some(path) => {
            let saved = Solution::load(path)?;
            check_solution_matches(cfg, &saved)?;
            let mut trace = saved.trace.clone();
            let mut current = saved.phi;
            let mut last = None;
            for &p in schedule.p_values.iter().filter(|&&p| p >= saved.p) {
                let step = solve_at_exponent(p, LambdaMode::Normalized, &current, None, &schedule.newton)?;
                trace.extend(step.trace.iter().copied());
                current = step.phi.clone();
                last = Some(step);
            }
            let mut sol = last.ok_or_else(|| Error::config("solve.schedule.p_values", "nothing left to continue"))?;
            sol.trace = trace;
            sol
        }
        None => {
            let init = perturbed_start(&lat, spin, cfg.grid, cfg.solve.perturbation, cfg.seed)?;
            solve_critical(&lat, spin, cfg.grid, schedule, Some(&init))?
        }
    };
    let mut report = solution_report("solve", cfg, &sol, schedule.newton.tol_for(cfg.grid));

    create_dir(&cfg.output)?;
    let sol_path = cfg.output.join("solution.json");
    sol.save(&sol_path)?;
    report.files.push(sol_path.display().to_string());
    let factor_path = cfg.output.join("metric_factor.json");
    let grid: Vec<f64> = sol.phi.pointwise_norms().iter().map(|r| r.powi(4)).collect();
    let body = serde_json::json!({ "n": cfg.grid, "exponent": 4, "values": grid });
    fs::write(&factor_path, format!("{body}\n")).map_err(|e| Error::io(&factor_path, e))?;
    report.files.push(factor_path.display().to_string());
    report.write(&cfg.output, "solve-report.json")?;
    Ok((report, sol))
}

fn surface_report(cfg: &RunConfig, command: &str, sol: &Solution) -> Result<(RunReport, crate::weierstrass::Immersion)> {
    if sol.p != P_CRITICAL {
        return Err(Error::Domain(format!("surfaces need a p = 4 solution, got p = {}", sol.p)));
    }
    let tol_solve = cfg.solve.schedule.newton.tol_for(sol.phi.n());
    let imm = immersion_from_solution(sol, &cfg.surface.integrate)?;
    let mut report = solution_report(command, cfg, sol, tol_solve);
    let checks = verify_immersion(&imm, &sol.phi, sol.lambda, &cfg.surface.verify)?;
    report.checks.extend(checks);
    let [v1, v2] = imm.periods();
    report.surface = Some(SurfaceSummary {
        h: imm.h(),
        periods: [[v1.x, v1.y, v1.z], [v2.x, v2.y, v2.z]],
        area: imm.area(),
        closedness: imm.closedness(),
        branch_points: imm.branch_points().to_vec(),
    });
    Ok((report, imm))
}

/// Weierstrass surface of a saved solution. Unless `verify_only`, writes
/// `surface.obj`, its sidecar and `surface-report.json`.
pub fn cmd_surface(cfg: &RunConfig, solution_path: &Path, verify_only: bool) -> Result<RunReport> {
    cfg.validate()?;
    let sol = Solution::load(solution_path)?;
    let (mut report, imm) = surface_report(cfg, "surface", &sol)?;
    if !verify_only {
        create_dir(&cfg.output)?;
        let copies = (cfg.surface.copies[0], cfg.surface.copies[1]);
        let mesh = export_mesh(&imm, Some(&report.checks), copies, &cfg.output.join("surface.obj"))?;
        report.files.push(mesh.obj.display().to_string());
        report.files.push(mesh.sidecar.display().to_string());
        report.write(&cfg.output, "surface-report.json")?;
    }
    Ok(report)
}

/// Every check on a saved solution and its surface; writes nothing.
pub fn cmd_check(cfg: &RunConfig, solution_path: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let sol = Solution::load(solution_path)?;
    Ok(surface_report(cfg, "check", &sol)?.0)
}

/// Process exit code for an error: 2 for invalid input, 3 for solver failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::IterationLimit { .. } | Error::ContinuationStep { .. } | Error::NotClosed { .. } => 3,
        _ => 2,
    }
}

/// `λ₁⁺√area` of the rectangular torus `(1, 0), (0, y)` with the spin
/// structure that is nontrivial along the second generator: `π/√y`.
pub fn rectangle_bound(y: f64) -> f64 {
    PI / y.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(y: f64, n: usize) -> RunConfig {
        RunConfig {
            grid: n,
            lattice: LatticeConfig {
                v1: [1.0, 0.0],
                v2: [0.0, y],
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn verdict_flips_at_the_sphere_value() {
        let t = sphere_lambda_min(2).unwrap();
        assert!((t - 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!(threshold_verdict(t - 1e-9).below);
        assert!(!threshold_verdict(t + 1e-9).below);
        assert!(!threshold_verdict(t).below);
        assert_eq!(threshold_verdict(PI).verdict, VERDICT_BELOW);
        assert_eq!(threshold_verdict(rectangle_bound(0.6)).verdict, VERDICT_NOT_MET);
    }

    #[test]
    fn toml_config_with_defaults() {
        let text = "grid = 16\nspin = [-1, 1]\nseed = 7\n\n[lattice]\nv1 = [1.0, 0.0]\nv2 = [0.2, 1.5]\n\n[surface]\ncopies = [2, 3]\n";
        let c = RunConfig::from_toml_str(text, Path::new("x.toml")).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid, 16);
        assert_eq!(c.spin, [-1, 1]);
        assert_eq!(c.surface.copies, [2, 3]);
        assert_eq!(c.solve.schedule.p_values.len(), 7);
        let json = serde_json::to_string(&c).unwrap();
        let back = RunConfig::from_json_str(&json, Path::new("x.json")).unwrap();
        assert_eq!(back.lattice, c.lattice);
    }

    #[test]
    fn validation_names_the_field() {
        let field = |c: &RunConfig| match c.validate() {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field(&cfg(1.0, 15)), "grid");
        assert_eq!(field(&cfg(1.0, 2)), "grid");
        assert_eq!(field(&cfg(1.0, 514)), "grid");
        assert_eq!(field(&cfg(0.0, 16)), "lattice");
        let mut c = cfg(1.0, 16);
        c.spin = [1, 0];
        assert_eq!(field(&c), "spin");
        let mut c = cfg(1.0, 16);
        c.surface.verify.cmc_tol = 0.0;
        assert_eq!(field(&c), "surface.verify.cmc_tol");
        let mut c = cfg(1.0, 16);
        c.mu_curve.q_values = vec![1.2];
        assert_eq!(field(&c), "mu_curve.q_values");
        assert!(cfg(1.0, 4).validate().is_ok() && cfg(1.0, 512).validate().is_ok());
    }

    #[test]
    fn parse_errors_carry_position_and_unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("grid = \n", Path::new("bad.toml")).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = RunConfig::from_toml_str("gird = 16\n", Path::new("bad.toml")).unwrap_err();
        assert!(err.to_string().contains("gird"), "{err}");
    }

    #[test]
    fn spectrum_of_square_tori() {
        let r = cmd_spectrum(&cfg(1.0, 12)).unwrap();
        let s = r.spectrum.unwrap();
        assert!((s.lambda1_plus_sqrt_area - PI).abs() < 1e-12);
        assert_eq!(s.kernel_dimension, 0);
        assert!(r.checks.passed(), "{:?}", r.checks);
        assert!(r.threshold.below);

        let mut trivial = cfg(1.0, 12);
        trivial.spin = [1, 1];
        let s = cmd_spectrum(&trivial).unwrap().spectrum.unwrap();
        assert_eq!(s.kernel_dimension, 2);

        let big = cmd_spectrum(&cfg(2.0, 64)).unwrap();
        assert_eq!(big.spectrum.as_ref().unwrap().numeric_method, "symbol");
        assert!(big.checks.passed());
    }

    #[test]
    fn mu_curve_report() {
        let mut c = cfg(1.5, 8);
        c.mu_curve.q_values = vec![2.0, 1.5];
        let r = cmd_mu_curve(&c).unwrap();
        assert!(r.checks.passed(), "{:?}", r.checks);
        let m = r.mu_curve.unwrap();
        assert_eq!(m.rows.iter().map(|r| r.q).collect::<Vec<_>>(), vec![1.5, 2.0]);
        assert!((m.rows[1].mu - m.mu2_dual).abs() < 1e-8);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("grid", "odd")), 2);
        assert_eq!(
            exit_code(&Error::NotClosed {
                residual: 1.0,
                tolerance: 1e-6
            }),
            3
        );
    }
}
