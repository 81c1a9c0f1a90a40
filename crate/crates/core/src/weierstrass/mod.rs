//! The spinorial Weierstrass representation on a flat torus.
//!
//! A solution of `Dφ = H|φ|²φ` yields the `ℝ³`-valued form
//!
//! ```text
//!   α = √2 (φ₊² + φ̄₋², i(φ₊² − φ̄₋²), 2iφ₊φ̄₋) dz̄/√2,
//! ```
//!
//! whose real part is closed. Integrating `dF = Re α` gives a conformal
//! immersion of the universal cover with mean curvature `H`, periodic up to
//! the translations `V(γ)`, with `|∂_xF| = |∂_yF| = |φ|²` and branch points
//! exactly at the zeros of `φ`.
//!
//! The constants are pinned by one calibration. On the rectangle with
//! generators `(1,0)`, `(0,y)` and spin signs `(+1,−1)` the constant-length
//! solution with `‖φ‖₄ = 1` integrates to the round cylinder of radius
//! `√y/(2π)` about an axis along `V₁`, with `|V₁| = 1/√y`, `V₂ = 0` and
//! mean curvature `π/√y`.

mod alpha;
mod integrate;
mod mesh;
mod verify;
mod zeros;

pub use alpha::{build_alpha, closedness_residual, OneFormField};
pub use integrate::{immersion_from_solution, integrate_immersion, Immersion, IntegrateOptions};
pub use mesh::{export_mesh, obj_text, ExportedMesh, MeshSidecar, SidecarDiagnostics};
pub use verify::{cmc_median_error, conformality_error, mean_curvature, median, verify_immersion, VerifyOptions};
pub use zeros::{count_zeros, locate_branch_points, BranchPoint, SpinorZero, ZeroReport};

#[cfg(test)]
mod tests;
