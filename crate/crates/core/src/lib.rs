//! Dirac spectra, critical nonlinear Dirac spinors and their constant mean
//! curvature surfaces on flat 2-tori.
//!
//! The modules follow the pipeline:
//!
//! - [`geometry`]: lattices, spin structures, closed-form spectra;
//! - [`dirac`], [`spinor`], [`fft`]: sampled spinor fields and the spectral
//!   Dirac operator;
//! - [`variational`]: the functional `F_q`, its ascent and `μ_q`;
//! - [`nonlinear`]: Newton continuation of `Dφ = λ|φ|^{p−2}φ` to `p = 4`;
//! - [`weierstrass`]: immersions `dF = Re α`, verification and mesh export;
//! - [`report`]: configs, JSON reports and the command drivers.
//!
//! ```
//! use torus_dirac::geometry::{Lattice, SpinStructure};
//! use torus_dirac::nonlinear::{solve_critical, ContinuationSchedule};
//! use torus_dirac::weierstrass::{immersion_from_solution, IntegrateOptions};
//!
//! let lat = Lattice::new([1.0, 0.0], [0.0, 1.5]).unwrap();
//! let spin = SpinStructure::from_signs(1, -1).unwrap();
//! let sol = solve_critical(&lat, spin, 16, &ContinuationSchedule::default(), None).unwrap();
//! let surface = immersion_from_solution(&sol, &IntegrateOptions::default()).unwrap();
//! assert!((surface.periods()[0].norm() - 1.5f64.sqrt().recip()).abs() < 1e-10);
//! ```

// `!(x > 0.0)` is how tolerances reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod dirac;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod krylov;
pub mod nonlinear;
pub mod report;
pub mod spinor;
pub mod variational;
pub mod weierstrass;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/variational.md")]
    mod variational {}
    #[doc = include_str!("../../../book/src/continuation.md")]
    mod continuation {}
    #[doc = include_str!("../../../book/src/weierstrass.md")]
    mod weierstrass {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
