//! Spinor fields sampled on a uniform grid of the fundamental domain.
//!
//! Samples sit at lattice coordinates `(j/N, l/N)`, i.e. at the physical
//! points `(j/N)·γ₁ + (l/N)·γ₂`, stored row-major with index `j·N + l`.
//! The twisted section `φ` is not periodic when the spin structure is
//! nontrivial, so the field stores the periodic coefficient function
//! `u = e^{−2πi⟨δ,x⟩}·φ` and the shift `δ` is reapplied in Fourier space.
//! Pointwise lengths agree: `|u| = |φ|`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DualMode, Lattice, SpinStructure};

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    lattice: Lattice,
    spin: SpinStructure,
    n: usize,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
}

pub(crate) fn check_grid(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::GridMismatch(format!(
            "grid size must be even and at least 4, got {n}"
        )));
    }
    Ok(())
}

impl SpinorField {
    pub fn zeros(lattice: Lattice, spin: SpinStructure, n: usize) -> Result<Self> {
        check_grid(n)?;
        let zero = vec![Complex64::new(0.0, 0.0); n * n];
        Ok(SpinorField {
            lattice,
            spin,
            n,
            plus: zero.clone(),
            minus: zero,
        })
    }

    /// Wraps already-untwisted samples.
    pub fn from_samples(
        lattice: Lattice,
        spin: SpinStructure,
        n: usize,
        plus: Vec<Complex64>,
        minus: Vec<Complex64>,
    ) -> Result<Self> {
        check_grid(n)?;
        if plus.len() != n * n || minus.len() != n * n {
            return Err(Error::GridMismatch(format!(
                "expected {} samples per component, got {} and {}",
                n * n,
                plus.len(),
                minus.len()
            )));
        }
        Ok(SpinorField {
            lattice,
            spin,
            n,
            plus,
            minus,
        })
    }

    /// Samples a twisted section given as a function of lattice coordinates
    /// `(s, t)`; `f` must satisfy `f(s+1, t) = ε₁ f(s, t)` and
    /// `f(s, t+1) = ε₂ f(s, t)`.
    pub fn from_twisted_fn(
        lattice: Lattice,
        spin: SpinStructure,
        n: usize,
        f: impl Fn(f64, f64) -> [Complex64; 2],
    ) -> Result<Self> {
        let mut field = SpinorField::zeros(lattice, spin, n)?;
        for j in 0..n {
            for l in 0..n {
                let (s, t) = (j as f64 / n as f64, l as f64 / n as f64);
                let [a, b] = f(s, t);
                let back = field.twist_phase(j, l).conj();
                field.plus[j * n + l] = a * back;
                field.minus[j * n + l] = b * back;
            }
        }
        Ok(field)
    }

    /// The plane wave `coeff · e^{2πi⟨ξ,x⟩}` for a mode compatible with the
    /// spin structure.
    pub fn plane_wave(
        lattice: Lattice,
        spin: SpinStructure,
        n: usize,
        mode: DualMode,
        coeff: [Complex64; 2],
    ) -> Result<Self> {
        if mode.holonomy() != [spin.eps1, spin.eps2] {
            return Err(Error::Domain(format!(
                "mode {mode:?} is not a section of spin structure {:?}",
                spin.signs()
            )));
        }
        let (a, b) = mode.coords();
        SpinorField::from_twisted_fn(lattice, spin, n, |s, t| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * (a * s + b * t));
            [coeff[0] * e, coeff[1] * e]
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn spin(&self) -> SpinStructure {
        self.spin
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plus(&self) -> &[Complex64] {
        &self.plus
    }

    pub fn minus(&self) -> &[Complex64] {
        &self.minus
    }

    pub fn plus_mut(&mut self) -> &mut [Complex64] {
        &mut self.plus
    }

    pub fn minus_mut(&mut self) -> &mut [Complex64] {
        &mut self.minus
    }

    pub fn components_mut(&mut self) -> (&mut [Complex64], &mut [Complex64]) {
        (&mut self.plus, &mut self.minus)
    }

    /// `e^{2πi⟨δ, x_jl⟩}` at grid point `(j, l)`.
    pub fn twist_phase(&self, j: usize, l: usize) -> Complex64 {
        let [a, b] = self.spin.pairings();
        let n = self.n as f64;
        Complex64::from_polar(1.0, 2.0 * PI * (a * j as f64 + b * l as f64) / n)
    }

    /// The twisted section `φ` at grid point `(j, l)`.
    pub fn twisted(&self, j: usize, l: usize) -> [Complex64; 2] {
        let i = j * self.n + l;
        let e = self.twist_phase(j, l);
        [self.plus[i] * e, self.minus[i] * e]
    }

    /// Quadrature weight `area / N²` of one grid cell.
    pub fn cell_weight(&self) -> f64 {
        self.lattice.area() / (self.n * self.n) as f64
    }

    /// `|φ|²` at flat index `i`.
    pub fn norm_sqr_at(&self, i: usize) -> f64 {
        self.plus[i].norm_sqr() + self.minus[i].norm_sqr()
    }

    /// Pointwise lengths `|φ|` on the grid.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.norm_sqr_at(i).sqrt()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.pointwise_norms().into_iter().fold(0.0, f64::max)
    }

    pub fn min_abs(&self) -> f64 {
        self.pointwise_norms().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `(∫|φ|^p)^{1/p}` by the uniform-grid rule.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "L^p norm needs p ≥ 1");
        (self.lp_integral(p)).powf(1.0 / p)
    }

    /// `∫|φ|^p`.
    pub fn lp_integral(&self, p: f64) -> f64 {
        let sum: f64 = (0..self.len())
            .map(|i| self.norm_sqr_at(i).powf(p / 2.0))
            .sum();
        sum * self.cell_weight()
    }

    pub fn l2_norm(&self) -> f64 {
        self.real_inner(self).sqrt()
    }

    /// Hermitian `L²` product `∫⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &SpinorField) -> Complex64 {
        let s: Complex64 = self
            .plus
            .iter()
            .zip(&other.plus)
            .chain(self.minus.iter().zip(&other.minus))
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.cell_weight()
    }

    /// Real `L²` product `Re ∫⟨self, other⟩`.
    pub fn real_inner(&self, other: &SpinorField) -> f64 {
        let s: f64 = self
            .plus
            .iter()
            .zip(&other.plus)
            .chain(self.minus.iter().zip(&other.minus))
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.cell_weight()
    }

    pub fn scaled(&self, c: Complex64) -> SpinorField {
        self.map_pointwise(|[a, b]| [a * c, b * c])
    }

    pub fn scaled_real(&self, c: f64) -> SpinorField {
        self.scaled(Complex64::new(c, 0.0))
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &SpinorField) -> SpinorField {
        let mut out = self.clone();
        out.axpy(c, other);
        out
    }

    /// `self += c·other`.
    pub fn axpy(&mut self, c: f64, other: &SpinorField) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.plus.iter_mut().zip(&other.plus) {
            *a += b * c;
        }
        for (a, b) in self.minus.iter_mut().zip(&other.minus) {
            *a += b * c;
        }
    }

    pub fn sub(&self, other: &SpinorField) -> SpinorField {
        self.add_scaled(-1.0, other)
    }

    pub fn map_pointwise(&self, f: impl Fn([Complex64; 2]) -> [Complex64; 2]) -> SpinorField {
        let mut out = self.clone();
        for i in 0..self.len() {
            let [a, b] = f([self.plus[i], self.minus[i]]);
            out.plus[i] = a;
            out.minus[i] = b;
        }
        out
    }

    /// `|φ|^e·φ` pointwise, with `0` mapped to `0` even when `e < 0`.
    pub fn times_norm_power(&self, e: f64) -> SpinorField {
        self.map_pointwise(|[a, b]| {
            let r2 = a.norm_sqr() + b.norm_sqr();
            if r2 == 0.0 {
                [a, b]
            } else {
                let f = r2.powf(e / 2.0);
                [a * f, b * f]
            }
        })
    }

    /// Same lattice, spin structure and grid.
    pub fn compatible(&self, other: &SpinorField) -> Result<()> {
        if self.n != other.n || self.lattice != other.lattice || self.spin != other.spin {
            return Err(Error::GridMismatch(
                "fields live on different tori or grids".into(),
            ));
        }
        Ok(())
    }

    /// Flattens to real coordinates: `(Re, Im)` pairs of all of `φ₊`, then all of `φ₋`.
    pub fn to_real_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.len());
        for z in self.plus.iter().chain(&self.minus) {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    /// Inverse of [`SpinorField::to_real_vec`] on the same torus and grid.
    pub fn with_real_vec(&self, v: &[f64]) -> SpinorField {
        let len = self.len();
        assert_eq!(v.len(), 4 * len);
        let mut out = self.clone();
        for i in 0..len {
            out.plus[i] = Complex64::new(v[2 * i], v[2 * i + 1]);
            out.minus[i] = Complex64::new(v[2 * (len + i)], v[2 * (len + i) + 1]);
        }
        out
    }

    pub fn to_file(&self) -> SpinorFile {
        let pack = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect();
        SpinorFile {
            format: SPINOR_FORMAT.to_string(),
            version: 1,
            lattice: LatticeRecord {
                gamma1: self.lattice.gamma1(),
                gamma2: self.lattice.gamma2(),
            },
            spin: self.spin.signs(),
            n: self.n,
            plus: pack(&self.plus),
            minus: pack(&self.minus),
        }
    }

    pub fn from_file(file: &SpinorFile) -> Result<Self> {
        let lattice = Lattice::new(file.lattice.gamma1, file.lattice.gamma2)?;
        let spin = SpinStructure::from_signs(file.spin[0], file.spin[1])?;
        let unpack = |v: &[[f64; 2]]| v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        SpinorField::from_samples(lattice, spin, file.n, unpack(&file.plus), unpack(&file.minus))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file()).expect("spinor file serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SpinorFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if file.format != SPINOR_FORMAT {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                reason: format!("expected format `{SPINOR_FORMAT}`, found `{}`", file.format),
            });
        }
        SpinorField::from_file(&file)
    }
}

pub const SPINOR_FORMAT: &str = "torus-dirac/spinor";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRecord {
    pub gamma1: [f64; 2],
    pub gamma2: [f64; 2],
}

/// JSON container for a spinor field: a header followed by row-major
/// `[re, im]` sample arrays of the untwisted coefficient functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorFile {
    pub format: String,
    pub version: u32,
    pub lattice: LatticeRecord,
    pub spin: [i32; 2],
    pub n: usize,
    pub plus: Vec<[f64; 2]>,
    pub minus: Vec<[f64; 2]>,
}
