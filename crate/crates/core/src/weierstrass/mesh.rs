use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::integrate::Immersion;
use super::zeros::BranchPoint;
use crate::check::CheckReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarDiagnostics {
    pub conformality: Option<f64>,
    pub closedness: f64,
    pub cmc_median_err: Option<f64>,
}

/// JSON companion of an exported mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSidecar {
    pub periods: [[f64; 3]; 2],
    #[serde(rename = "H")]
    pub h: f64,
    pub lambda: f64,
    pub copies: [usize; 2],
    pub vertices: usize,
    pub faces: usize,
    pub diagnostics: SidecarDiagnostics,
    pub branch_points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportedMesh {
    pub obj: PathBuf,
    pub sidecar: PathBuf,
}

/// OBJ text for `k₁ × k₂` fundamental domains: an `(k₁N+1) × (k₂N+1)` vertex
/// grid, the vertex at `(j, l)` placed at `F(j mod N, l mod N)` plus the
/// periods, and two counter-clockwise triangles per cell.
pub fn obj_text(imm: &Immersion, copies: (usize, usize)) -> Result<String> {
    let (k1, k2) = copies;
    if k1 == 0 || k2 == 0 {
        return Err(Error::Domain("mesh tiling counts must be at least 1".into()));
    }
    let n = imm.n();
    let (rows, cols) = (k1 * n + 1, k2 * n + 1);
    let mut out = String::new();
    writeln!(out, "# {rows}x{cols} vertices, {} faces", 2 * (rows - 1) * (cols - 1)).unwrap();
    for j in 0..rows {
        for l in 0..cols {
            let p = imm.point_unwrapped(j as i64, l as i64);
            writeln!(out, "v {} {} {}", p[0], p[1], p[2]).unwrap();
        }
    }
    let id = |j: usize, l: usize| j * cols + l + 1;
    for j in 0..rows - 1 {
        for l in 0..cols - 1 {
            let (a, b, c, d) = (id(j, l), id(j + 1, l), id(j + 1, l + 1), id(j, l + 1));
            writeln!(out, "f {a} {b} {c}").unwrap();
            writeln!(out, "f {a} {c} {d}").unwrap();
        }
    }
    Ok(out)
}

/// Writes `path` (OBJ) and `path` with extension `json` (sidecar).
pub fn export_mesh(
    imm: &Immersion,
    report: Option<&CheckReport>,
    copies: (usize, usize),
    path: &Path,
) -> Result<ExportedMesh> {
    let text = obj_text(imm, copies)?;
    let n = imm.n();
    let [v1, v2] = imm.periods();
    let value = |name: &str| report.and_then(|r| r.get(name)).map(|c| c.value);
    let sidecar = MeshSidecar {
        periods: [[v1[0], v1[1], v1[2]], [v2[0], v2[1], v2[2]]],
        h: imm.h(),
        lambda: imm.h(),
        copies: [copies.0, copies.1],
        vertices: (copies.0 * n + 1) * (copies.1 * n + 1),
        faces: 2 * copies.0 * copies.1 * n * n,
        diagnostics: SidecarDiagnostics {
            conformality: value("conformality"),
            closedness: imm.closedness(),
            cmc_median_err: value("cmc_median_rel").or(value("cmc_median_abs")),
        },
        branch_points: imm.branch_points().to_vec(),
    };
    let sidecar_path = path.with_extension("json");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&sidecar_path, json).map_err(|e| Error::io(&sidecar_path, e))?;
    Ok(ExportedMesh {
        obj: path.to_path_buf(),
        sidecar: sidecar_path,
    })
}
