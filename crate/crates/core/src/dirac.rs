//! The flat Dirac operator applied spectrally.
//!
//! In the half-spinor splitting `φ = (φ₊, φ₋)` with unit frames the operator
//! reads `D = (0, 2i∂_z̄; 2i∂_z, 0)`, `∂_z̄ = ½(∂_x + i∂_y)`. On a plane wave
//! `e^{2πi⟨ξ,x⟩}` it acts through the Hermitian symbol
//!
//! ```text
//!   S(ξ) = ( 0      −2πw )      w = ξ₁ + iξ₂,
//!          ( −2πw̄    0   )
//! ```
//!
//! whose eigenvalues are `±2π|ξ|`, so `D² = −Δ`. The phase of the
//! off-diagonal entries is the one for which the spinorial Weierstrass form
//! built from a solution of `Dφ = H|φ|²φ` is closed; the cylinder test in
//! [`crate::weierstrass`] pins it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::geometry::{Lattice, SpinStructure};
use crate::spinor::SpinorField;

/// Largest grid for which [`dirac_spectrum_numeric`] builds a dense matrix.
pub const DENSE_GRID_CAP: usize = 24;

/// Shifted mode coordinates `(m + δ₁', k + δ₂')` for FFT bin `(j, l)` and the
/// complex number `w = ξ₁ + iξ₂`.
#[derive(Debug, Clone, Copy)]
pub struct ModeInfo {
    pub a: f64,
    pub b: f64,
    pub w: Complex64,
}

impl ModeInfo {
    /// `2π|ξ|`, the modulus of the symbol's eigenvalues.
    pub fn frequency(&self) -> f64 {
        2.0 * PI * self.w.norm()
    }
}

/// Mode table for every FFT bin of an `N×N` grid, row-major.
pub fn mode_table(lat: &Lattice, spin: SpinStructure, n: usize) -> Vec<ModeInfo> {
    let [da, db] = spin.pairings();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for l in 0..n {
            let a = fft::signed_index(j, n) as f64 + da;
            let b = fft::signed_index(l, n) as f64 + db;
            let xi = lat.dual_vector(a, b);
            out.push(ModeInfo {
                a,
                b,
                w: Complex64::new(xi[0], xi[1]),
            });
        }
    }
    out
}

/// Forward transforms of both components.
pub(crate) fn spectrum_of(phi: &SpinorField) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = phi.n();
    let mut p = phi.plus().to_vec();
    let mut m = phi.minus().to_vec();
    fft::forward(&mut p, n);
    fft::forward(&mut m, n);
    (p, m)
}

/// Applies a per-mode 2×2 map in Fourier space.
pub(crate) fn fourier_multiplier(
    phi: &SpinorField,
    f: impl Fn(&ModeInfo, Complex64, Complex64) -> (Complex64, Complex64),
) -> SpinorField {
    let n = phi.n();
    let modes = mode_table(phi.lattice(), phi.spin(), n);
    let (mut p, mut m) = spectrum_of(phi);
    for (i, mode) in modes.iter().enumerate() {
        let (a, b) = f(mode, p[i], m[i]);
        p[i] = a;
        m[i] = b;
    }
    fft::inverse(&mut p, n);
    fft::inverse(&mut m, n);
    let mut out = phi.clone();
    out.plus_mut().copy_from_slice(&p);
    out.minus_mut().copy_from_slice(&m);
    out
}

/// `Dφ`, exact for fields band-limited to the grid's mode window.
pub fn apply_dirac(phi: &SpinorField) -> SpinorField {
    fourier_multiplier(phi, |mode, up, um| {
        let s = -2.0 * PI * mode.w;
        (s * um, s.conj() * up)
    })
}

/// Removes the `L²`-orthogonal projection onto `ker D`. The kernel is
/// spanned by the constant spinors and is nonzero only for the trivial spin
/// structure.
pub fn project_out_kernel(phi: &SpinorField) -> SpinorField {
    if !phi.spin().is_trivial() {
        return phi.clone();
    }
    let len = phi.len() as f64;
    let mean_p: Complex64 = phi.plus().iter().sum::<Complex64>() / len;
    let mean_m: Complex64 = phi.minus().iter().sum::<Complex64>() / len;
    phi.map_pointwise(|[a, b]| [a - mean_p, b - mean_m])
}

/// Multiplies every mode by `1/(2π|ξ| + shift)`; an `L²`-self-adjoint,
/// positive smoothing operator used as a preconditioner.
pub(crate) fn abs_dirac_shifted_inverse(phi: &SpinorField, shift: f64) -> SpinorField {
    fourier_multiplier(phi, |mode, up, um| {
        let g = 1.0 / (mode.frequency() + shift);
        (up * g, um * g)
    })
}

/// The pseudo-inverse of `D²`: multiplies by `(2π|ξ|)⁻²` and kills `ker D`.
pub(crate) fn dirac_square_pinv(phi: &SpinorField) -> SpinorField {
    fourier_multiplier(phi, |mode, up, um| {
        let f = mode.frequency();
        if f == 0.0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            let g = 1.0 / (f * f);
            (up * g, um * g)
        }
    })
}

/// A constant-length eigenspinor for the smallest positive eigenvalue,
/// built from one shortest shifted dual mode (the first in the sorted mode
/// list) and normalized to unit `L²` norm. Returns the field and eigenvalue.
pub fn first_eigenspinor(lat: &Lattice, spin: SpinStructure, n: usize) -> Result<(SpinorField, f64)> {
    let lambda = crate::geometry::lambda1_plus(lat, spin);
    let set = crate::geometry::DualModeSet::within(lat, spin, lambda);
    let mode = set
        .modes
        .iter()
        .find(|m| m.twice_a != 0 || m.twice_b != 0)
        .copied()
        .expect("a nonzero mode exists below λ₁⁺");
    let xi = mode.vector(lat);
    let w = Complex64::new(xi[0], xi[1]);
    let field = SpinorField::plane_wave(*lat, spin, n, mode, [-w / w.norm(), Complex64::new(1.0, 0.0)])?;
    let norm = field.l2_norm();
    Ok((field.scaled_real(1.0 / norm), lambda))
}

/// A random field whose untwisted coefficients live on the modes with signed
/// indices in `[−bandwidth, bandwidth]²`; entries uniform in the unit square.
pub fn random_band_limited(
    lat: &Lattice,
    spin: SpinStructure,
    n: usize,
    bandwidth: usize,
    rng: &mut impl rand::Rng,
) -> Result<SpinorField> {
    let mut field = SpinorField::zeros(*lat, spin, n)?;
    let band = bandwidth.min(n / 2 - 1) as i64;
    let nn = (n * n) as f64;
    let (p, m) = field.components_mut();
    for comp in [p, m] {
        for j in 0..n {
            for l in 0..n {
                if fft::signed_index(j, n).abs() <= band && fft::signed_index(l, n).abs() <= band {
                    comp[j * n + l] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * nn;
                }
            }
        }
        fft::inverse(comp, n);
    }
    Ok(field)
}

/// An eigenpair of the discretized operator; `field` has unit `L²` norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub field: SpinorField,
}

/// The `k` eigenpairs closest to zero of the dense `2N²×2N²` matrix of
/// [`apply_dirac`] in the sample basis, sorted by `|value|`, then value.
pub fn dirac_spectrum_numeric(
    lat: &Lattice,
    spin: SpinStructure,
    n: usize,
    k: usize,
) -> Result<Vec<EigenPair>> {
    let zero = SpinorField::zeros(*lat, spin, n)?;
    let dim = 2 * n * n;
    if k > dim {
        return Err(Error::Size {
            requested: k,
            available: dim,
        });
    }
    if n > DENSE_GRID_CAP {
        return Err(Error::Domain(format!(
            "dense spectra are limited to N ≤ {DENSE_GRID_CAP}, got {n}"
        )));
    }
    let matrix = dense_dirac_matrix(&zero);
    let eig = SymmetricEigen::new(matrix);
    let order = modulus_order(eig.eigenvalues.as_slice());
    let len = n * n;
    let pairs = order
        .into_iter()
        .take(k)
        .map(|idx| {
            let col = eig.eigenvectors.column(idx);
            let plus: Vec<Complex64> = (0..len).map(|i| col[i]).collect();
            let minus: Vec<Complex64> = (0..len).map(|i| col[len + i]).collect();
            let field = SpinorField::from_samples(*lat, spin, n, plus, minus)
                .expect("grid already validated");
            let norm = field.l2_norm();
            EigenPair {
                value: eig.eigenvalues[idx],
                field: field.scaled_real(1.0 / norm),
            }
        })
        .collect();
    Ok(pairs)
}

/// All eigenvalues of the dense matrix, ascending.
pub fn dirac_eigenvalues_dense(lat: &Lattice, spin: SpinStructure, n: usize) -> Result<Vec<f64>> {
    if n > DENSE_GRID_CAP {
        return Err(Error::Domain(format!(
            "dense spectra are limited to N ≤ {DENSE_GRID_CAP}, got {n}"
        )));
    }
    let zero = SpinorField::zeros(*lat, spin, n)?;
    let mut values: Vec<f64> = dense_dirac_matrix(&zero)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Indices sorting `values` by modulus; runs whose moduli agree to a relative
/// `1e-9` are ordered by value, so `−λ` precedes `+λ` despite round-off.
fn modulus_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs()));
    let mut start = 0;
    while start < order.len() {
        let base = values[order[start]].abs();
        let mut end = start + 1;
        while end < order.len() && values[order[end]].abs() - base <= 1e-9 * base.max(1e-9) {
            end += 1;
        }
        order[start..end].sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        start = end;
    }
    order
}

fn dense_dirac_matrix(zero: &SpinorField) -> DMatrix<Complex64> {
    let len = zero.len();
    let dim = 2 * len;
    let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        let mut basis = zero.clone();
        if col < len {
            basis.plus_mut()[col] = Complex64::new(1.0, 0.0);
        } else {
            basis.minus_mut()[col - len] = Complex64::new(1.0, 0.0);
        }
        let image = apply_dirac(&basis);
        for i in 0..len {
            matrix[(i, col)] = image.plus()[i];
            matrix[(len + i, col)] = image.minus()[i];
        }
    }
    // symmetrize away round-off so the Hermitian solver sees exact symmetry
    let adjoint = matrix.adjoint();
    (matrix + adjoint) * Complex64::new(0.5, 0.0)
}

/// Trigonometric interpolant of a twisted section, evaluable off-grid.
#[derive(Debug, Clone)]
pub struct Interpolant {
    inner: fft::TrigInterpolant,
}

impl Interpolant {
    /// The interpolant of the stored coefficient functions through the
    /// shifted modes, so evaluating it yields the twisted section `φ`.
    pub fn new(phi: &SpinorField) -> Self {
        let inner = fft::TrigInterpolant::new(&[phi.plus(), phi.minus()], phi.n(), phi.spin().pairings());
        Interpolant { inner }
    }

    /// `φ(s, t)` at lattice coordinates `(s, t)`.
    pub fn value(&self, s: f64, t: f64) -> [Complex64; 2] {
        let v = self.inner.value(s, t);
        [v[0], v[1]]
    }

    /// `(φ, ∂_s φ, ∂_t φ)` at `(s, t)`.
    pub fn jet(&self, s: f64, t: f64) -> [[Complex64; 2]; 3] {
        let [v, ds, dt] = self.inner.jet(s, t);
        [[v[0], v[1]], [ds[0], ds[1]], [dt[0], dt[1]]]
    }
}
