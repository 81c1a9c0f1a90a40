use std::f64::consts::SQRT_2;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::fft;
use crate::geometry::Lattice;
use crate::spinor::SpinorField;

/// The `ℝ³`-valued `(0,1)`-form `α` on the grid, stored as coefficients
/// `(a₁, a₂, a₃)` against the unit coframe `dz̄/√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    lattice: Lattice,
    n: usize,
    a: [Vec<Complex64>; 3],
}

impl OneFormField {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component(&self, k: usize) -> &[Complex64] {
        &self.a[k]
    }

    pub fn at(&self, i: usize) -> [Complex64; 3] {
        [self.a[0][i], self.a[1][i], self.a[2][i]]
    }

    /// `Re α` evaluated on `∂_s` and `∂_t`, i.e. the prescribed `(∂_s F, ∂_t F)`.
    /// Since `dz̄(∂_x) = 1` and `dz̄(∂_y) = −i`, `∂_x F = Re a/√2` and
    /// `∂_y F = Im a/√2`; a generator `γ` gives `Re(γ̄ a)/√2` with `γ`
    /// read as a complex number.
    pub fn differential(&self) -> [Vec<Vector3<f64>>; 2] {
        let project = |g: [f64; 2]| -> Vec<Vector3<f64>> {
            let gc = Complex64::new(g[0], -g[1]);
            (0..self.n * self.n)
                .map(|i| {
                    let [a1, a2, a3] = self.at(i);
                    Vector3::new((gc * a1).re, (gc * a2).re, (gc * a3).re) / SQRT_2
                })
                .collect()
        };
        [project(self.lattice.gamma1()), project(self.lattice.gamma2())]
    }
}

/// `α = √2(φ₊² + φ̄₋², i(φ₊² − φ̄₋²), 2iφ₊φ̄₋)` from the twisted values of `φ`;
/// the result is periodic because `α` is quadratic in `φ`.
pub fn build_alpha(phi: &SpinorField) -> OneFormField {
    let n = phi.n();
    let zero = Complex64::new(0.0, 0.0);
    let mut a = [vec![zero; n * n], vec![zero; n * n], vec![zero; n * n]];
    let i_unit = Complex64::new(0.0, 1.0);
    for j in 0..n {
        for l in 0..n {
            let idx = j * n + l;
            let [p, m] = phi.twisted(j, l);
            let (pp, mm) = (p * p, m.conj() * m.conj());
            a[0][idx] = SQRT_2 * (pp + mm);
            a[1][idx] = SQRT_2 * i_unit * (pp - mm);
            a[2][idx] = 2.0 * SQRT_2 * i_unit * p * m.conj();
        }
    }
    OneFormField {
        lattice: *phi.lattice(),
        n,
        a,
    }
}

/// Spectral `(∂_s, ∂_t)` of a real vector field on the grid.
pub(crate) fn vector_gradient(field: &[Vector3<f64>], n: usize) -> [Vec<Vector3<f64>>; 2] {
    let mut ds = vec![Vector3::zeros(); n * n];
    let mut dt = vec![Vector3::zeros(); n * n];
    for c in 0..3 {
        let data: Vec<Complex64> = field.iter().map(|v| Complex64::new(v[c], 0.0)).collect();
        let [gs, gt] = fft::gradient(&data, n);
        for i in 0..n * n {
            ds[i][c] = gs[i].re;
            dt[i][c] = gt[i].re;
        }
    }
    [ds, dt]
}

/// Relative failure of `d(Re α) = 0`: the `L²` norm of
/// `∂_t(Re α(∂_s)) − ∂_s(Re α(∂_t))` over `2π‖Re α‖_{L²}`, both on the
/// parameter square. Zero for exactly closed data, order one for generic
/// fields.
pub fn closedness_residual(alpha: &OneFormField) -> f64 {
    let n = alpha.n();
    let [gs, gt] = alpha.differential();
    let scale: f64 = gs.iter().chain(&gt).map(|v| v.norm_squared()).sum::<f64>();
    if scale == 0.0 {
        return 0.0;
    }
    let [_, d_t_gs] = vector_gradient(&gs, n);
    let [d_s_gt, _] = vector_gradient(&gt, n);
    let curl: f64 = d_t_gs
        .iter()
        .zip(&d_s_gt)
        .map(|(a, b)| (a - b).norm_squared())
        .sum();
    (curl / scale).sqrt() / (2.0 * std::f64::consts::PI)
}
