//! Flat tori `R²/Γ`, their spin structures, and closed-form spectral data.
//!
//! A spin structure on a flat torus is a homomorphism `χ: Γ → {±1}`, fixed by
//! its values on the two generators. Sections twisted by `χ` expand in plane
//! waves `e^{2πi⟨ξ,x⟩}` with `ξ` ranging over the shifted dual lattice
//! `Γ* + δ`, where `⟨δ, γᵢ⟩ = 0` if `χ(γᵢ) = +1` and `½` otherwise. The flat
//! Dirac operator acts on the mode `ξ` with eigenvalues `±2π|ξ|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide that two eigenvalues coincide.
const TIE_TOL: f64 = 1e-12;

/// The lattice `Γ = span_Z{gamma1, gamma2}` with positive orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    gamma1: [f64; 2],
    gamma2: [f64; 2],
}

impl Lattice {
    /// Builds a positively oriented lattice. If `det(v1, v2) < 0` the
    /// generators are swapped, so spin signs supplied afterwards refer to the
    /// returned generator order.
    pub fn new(v1: [f64; 2], v2: [f64; 2]) -> Result<Self> {
        let det = v1[0] * v2[1] - v1[1] * v2[0];
        let scale = norm(v1) * norm(v2);
        if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-12 * scale {
            return Err(Error::InvalidLattice(v1, v2));
        }
        if det > 0.0 {
            Ok(Lattice {
                gamma1: v1,
                gamma2: v2,
            })
        } else {
            Ok(Lattice {
                gamma1: v2,
                gamma2: v1,
            })
        }
    }

    pub fn unit_square() -> Self {
        Lattice {
            gamma1: [1.0, 0.0],
            gamma2: [0.0, 1.0],
        }
    }

    /// The lattice generated by `(1, 0)` and `(x, y)`, `y > 0`.
    pub fn normalized(x: f64, y: f64) -> Result<Self> {
        if y <= 0.0 {
            return Err(Error::Domain(format!("need y > 0, got {y}")));
        }
        Lattice::new([1.0, 0.0], [x, y])
    }

    pub fn gamma1(&self) -> [f64; 2] {
        self.gamma1
    }

    pub fn gamma2(&self) -> [f64; 2] {
        self.gamma2
    }

    pub fn det(&self) -> f64 {
        self.gamma1[0] * self.gamma2[1] - self.gamma1[1] * self.gamma2[0]
    }

    pub fn area(&self) -> f64 {
        self.det()
    }

    /// The dual basis `(γ₁*, γ₂*)` with `⟨γᵢ*, γⱼ⟩ = δᵢⱼ`.
    pub fn dual_basis(&self) -> ([f64; 2], [f64; 2]) {
        let d = self.det();
        (
            [self.gamma2[1] / d, -self.gamma2[0] / d],
            [-self.gamma1[1] / d, self.gamma1[0] / d],
        )
    }

    /// Physical point `s·γ₁ + t·γ₂`.
    pub fn point(&self, s: f64, t: f64) -> [f64; 2] {
        [
            s * self.gamma1[0] + t * self.gamma2[0],
            s * self.gamma1[1] + t * self.gamma2[1],
        ]
    }

    /// Dual-lattice vector `a·γ₁* + b·γ₂*`.
    pub fn dual_vector(&self, a: f64, b: f64) -> [f64; 2] {
        let (d1, d2) = self.dual_basis();
        [a * d1[0] + b * d2[0], a * d1[1] + b * d2[1]]
    }

    /// The homothetic lattice `c·Γ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Domain(format!("scale factor must be positive, got {c}")));
        }
        Ok(Lattice {
            gamma1: [c * self.gamma1[0], c * self.gamma1[1]],
            gamma2: [c * self.gamma2[0], c * self.gamma2[1]],
        })
    }

    /// The homothetic copy with unit area.
    pub fn with_unit_area(&self) -> Self {
        let c = self.area().sqrt().recip();
        self.scaled(c).expect("area is positive")
    }

    /// Smallest singular value of the dual basis matrix; bounds `|ξ|` below by
    /// `σ_min · |(a, b)|` for `ξ = a·γ₁* + b·γ₂*`.
    pub fn dual_sigma_min(&self) -> f64 {
        let (d1, d2) = self.dual_basis();
        let a = d1[0] * d1[0] + d1[1] * d1[1];
        let c = d2[0] * d2[0] + d2[1] * d2[1];
        let b = d1[0] * d2[0] + d1[1] * d2[1];
        let tr = a + c;
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        ((tr - disc) / 2.0).max(0.0).sqrt()
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Holonomy sign of a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i32(v: i32) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn to_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// Twice the canonical pairing `⟨δ, γ⟩ ∈ {0, ½}`.
    fn twice_shift(self) -> i64 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// A spin structure, given by `χ(γ₁)` and `χ(γ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinStructure {
    pub eps1: Sign,
    pub eps2: Sign,
}

impl SpinStructure {
    pub const fn new(eps1: Sign, eps2: Sign) -> Self {
        SpinStructure { eps1, eps2 }
    }

    pub const fn trivial() -> Self {
        SpinStructure::new(Sign::Plus, Sign::Plus)
    }

    pub fn from_signs(eps1: i32, eps2: i32) -> Result<Self> {
        let s1 = Sign::from_i32(eps1)
            .ok_or_else(|| Error::Domain(format!("spin sign must be ±1, got {eps1}")))?;
        let s2 = Sign::from_i32(eps2)
            .ok_or_else(|| Error::Domain(format!("spin sign must be ±1, got {eps2}")))?;
        Ok(SpinStructure::new(s1, s2))
    }

    /// All four spin structures of a torus.
    pub fn all() -> [SpinStructure; 4] {
        use Sign::*;
        [
            SpinStructure::new(Plus, Plus),
            SpinStructure::new(Plus, Minus),
            SpinStructure::new(Minus, Plus),
            SpinStructure::new(Minus, Minus),
        ]
    }

    pub fn is_trivial(&self) -> bool {
        self.eps1 == Sign::Plus && self.eps2 == Sign::Plus
    }

    pub fn signs(&self) -> [i32; 2] {
        [self.eps1.to_i32(), self.eps2.to_i32()]
    }

    /// Canonical pairings `(⟨δ,γ₁⟩, ⟨δ,γ₂⟩)`, each in `{0, ½}`.
    pub fn pairings(&self) -> [f64; 2] {
        [
            self.eps1.twice_shift() as f64 / 2.0,
            self.eps2.twice_shift() as f64 / 2.0,
        ]
    }
}

/// The dual-lattice shift `δ` encoding a spin structure.
pub fn spin_shift(lat: &Lattice, spin: SpinStructure) -> [f64; 2] {
    let [a, b] = spin.pairings();
    lat.dual_vector(a, b)
}

/// A shifted dual mode `ξ = (m + δ₁')γ₁* + (k + δ₂')γ₂*`, stored as the twice
/// the coordinates so that pairings with the generators stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualMode {
    pub twice_a: i64,
    pub twice_b: i64,
}

impl DualMode {
    /// Coordinates `(⟨ξ,γ₁⟩, ⟨ξ,γ₂⟩)`.
    pub fn coords(&self) -> (f64, f64) {
        (self.twice_a as f64 / 2.0, self.twice_b as f64 / 2.0)
    }

    pub fn vector(&self, lat: &Lattice) -> [f64; 2] {
        let (a, b) = self.coords();
        lat.dual_vector(a, b)
    }

    pub fn norm(&self, lat: &Lattice) -> f64 {
        norm(self.vector(lat))
    }

    /// `exp(2πi⟨ξ, γᵢ⟩)` evaluated exactly: `+1` for integer pairings and `−1`
    /// for half-integer ones.
    pub fn holonomy(&self) -> [Sign; 2] {
        let sgn = |twice: i64| {
            if twice.rem_euclid(2) == 0 {
                Sign::Plus
            } else {
                Sign::Minus
            }
        };
        [sgn(self.twice_a), sgn(self.twice_b)]
    }
}

/// The finite set of shifted dual modes with `2π|ξ| ≤ radius`.
#[derive(Debug, Clone)]
pub struct DualModeSet {
    pub lattice: Lattice,
    pub spin: SpinStructure,
    pub shift: [f64; 2],
    pub modes: Vec<DualMode>,
}

impl DualModeSet {
    /// Enumerates every mode with eigenvalue magnitude `2π|ξ| ≤ radius`,
    /// sorted by `|ξ|` then by coordinates.
    pub fn within(lat: &Lattice, spin: SpinStructure, radius: f64) -> Self {
        let sigma = lat.dual_sigma_min();
        let reach = (radius / (2.0 * PI * sigma)).floor() as i64 + 1;
        let s1 = spin.eps1.twice_shift();
        let s2 = spin.eps2.twice_shift();
        let mut modes = Vec::new();
        for m in -reach - 1..=reach + 1 {
            for k in -reach - 1..=reach + 1 {
                let mode = DualMode {
                    twice_a: 2 * m + s1,
                    twice_b: 2 * k + s2,
                };
                if 2.0 * PI * mode.norm(lat) <= radius * (1.0 + TIE_TOL) {
                    modes.push(mode);
                }
            }
        }
        modes.sort_by(|x, y| {
            x.norm(lat)
                .total_cmp(&y.norm(lat))
                .then(x.twice_a.cmp(&y.twice_a))
                .then(x.twice_b.cmp(&y.twice_b))
        });
        DualModeSet {
            lattice: *lat,
            spin,
            shift: spin_shift(lat, spin),
            modes,
        }
    }
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// The eigenvalues of the flat Dirac operator closest to zero, as
/// `(value, complex multiplicity)` pairs sorted by value.
///
/// Every shifted dual mode `ξ ≠ 0` contributes `+2π|ξ|` and `−2π|ξ|` once;
/// `ξ = 0` (trivial spin structure only) contributes `0` twice, once per half
/// spinor. Enough whole eigenvalue groups are returned to cover the `count`
/// eigenvalues of smallest modulus counted with multiplicity; a group that
/// straddles the cut, and its mirror image, are always completed. Real
/// multiplicities are twice the complex ones.
pub fn closed_form_spectrum(lat: &Lattice, spin: SpinStructure, count: usize) -> Vec<(f64, usize)> {
    let count = count.max(1);
    let (d1, d2) = lat.dual_basis();
    let mut radius = 2.0 * PI * (norm(d1).max(norm(d2)) + norm(spin_shift(lat, spin)));
    let values = loop {
        let set = DualModeSet::within(lat, spin, radius);
        let mut values = Vec::with_capacity(2 * set.modes.len());
        for mode in &set.modes {
            let lambda = 2.0 * PI * mode.norm(lat);
            if mode.twice_a == 0 && mode.twice_b == 0 {
                values.push(0.0);
                values.push(0.0);
            } else {
                values.push(lambda);
                values.push(-lambda);
            }
        }
        if values.len() >= count {
            break values;
        }
        radius *= 2.0;
    };

    let mut by_modulus = values;
    by_modulus.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let cut = by_modulus[count - 1].abs();
    let kept: Vec<f64> = by_modulus
        .into_iter()
        .filter(|v| v.abs() <= cut || same_value(v.abs(), cut))
        .collect();
    group_values(kept)
}

/// Collapses a list of eigenvalues into `(value, multiplicity)` groups sorted
/// ascending by value, then by multiplicity.
pub fn group_values(mut values: Vec<f64>) -> Vec<(f64, usize)> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((w, m)) if same_value(*w, v) => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

/// Smallest positive eigenvalue from the closed-form spectrum.
pub fn lambda1_plus(lat: &Lattice, spin: SpinStructure) -> f64 {
    let mut count = 4;
    loop {
        let spec = closed_form_spectrum(lat, spin, count);
        if let Some((v, _)) = spec.iter().find(|(v, _)| *v > 0.0) {
            return *v;
        }
        count *= 2;
    }
}

/// Volume of the unit sphere `Sⁿ ⊂ Rⁿ⁺¹`, `2π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn sphere_volume(n: u32) -> f64 {
    let half = n + 1; // Γ(half / 2)
    let gamma = if half.is_multiple_of(2) {
        (1..half / 2).map(f64::from).product::<f64>()
    } else {
        // Γ(k + ½) = (2k)! √π / (4ᵏ k!)
        let k = half / 2;
        let mut g = PI.sqrt();
        for j in 0..k {
            g *= j as f64 + 0.5;
        }
        g
    };
    2.0 * PI.powf(half as f64 / 2.0) / gamma
}

/// `λ_min⁺(Sⁿ) = (n/2)·ω_n^{1/n}`, the value attained by Killing spinors on
/// the round sphere of unit curvature.
pub fn sphere_lambda_min(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere_lambda_min needs n ≥ 2, got {n}")));
    }
    Ok(n as f64 / 2.0 * sphere_volume(n).powf(1.0 / n as f64))
}
