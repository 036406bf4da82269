//! File formats: Wavefront OBJ meshes with a JSON sidecar for the slab and
//! boundary loops, and CSV tables for fields and profiles.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryLoop, ScalarField, Slab, SurfaceMesh, Vec3};

/// What OBJ cannot carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSidecar {
    pub slab: Slab,
    pub loops: Vec<BoundaryLoop>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Sidecar path for an OBJ file: same stem, `.json` extension.
pub fn sidecar_path(obj: &Path) -> PathBuf {
    obj.with_extension("json")
}

pub fn mesh_to_obj(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Write `mesh` to `path` and its sidecar next to it; returns both paths.
pub fn write_mesh(mesh: &SurfaceMesh, path: &Path) -> Result<[PathBuf; 2]> {
    write_text(path, &mesh_to_obj(mesh))?;
    let side = sidecar_path(path);
    let meta = MeshSidecar { slab: mesh.slab().clone(), loops: mesh.loops().to_vec() };
    write_text(&side, &serde_json::to_string_pretty(&meta)?)?;
    Ok([path.to_path_buf(), side])
}

/// Parse OBJ vertex and triangle lines; other records are ignored.
pub fn parse_obj(text: &str, context: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let bad = |line: usize, message: String| Error::Parse { context: format!("{context}:{}", line + 1), message };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|e| bad(ln, e.to_string())))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(bad(ln, "vertex needs three coordinates".into()));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|s| {
                        let first = s.split('/').next().unwrap_or(s);
                        first.parse::<usize>().map_err(|e| bad(ln, e.to_string()))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 || idx.iter().any(|&i| i == 0) {
                    return Err(bad(ln, "only triangles with 1-based indices are supported".into()));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn read_mesh(path: &Path, sidecar: Option<&Path>) -> Result<SurfaceMesh> {
    let (vertices, faces) = parse_obj(&read_text(path)?, &path.display().to_string())?;
    let side = sidecar.map(Path::to_path_buf).unwrap_or_else(|| sidecar_path(path));
    let meta: MeshSidecar = serde_json::from_str(&read_text(&side)?)
        .map_err(|e| Error::Parse { context: side.display().to_string(), message: e.to_string() })?;
    SurfaceMesh::new(vertices, faces, meta.loops, meta.slab)
}

/// One row per active node: coordinates, value and node tag.
pub fn field_to_csv(u: &ScalarField) -> String {
    let grid = u.grid();
    let dim = grid.dim();
    let mut out = String::new();
    let names = ["x", "y", "z"];
    for name in names.iter().take(dim) {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("u,tag\n");
    for (slot, &k) in grid.active_nodes().iter().enumerate() {
        for c in grid.coords(k) {
            let _ = write!(out, "{c:.17e},");
        }
        let _ = writeln!(out, "{:.17e},{:?}", u.values()[slot], grid.tag(k));
    }
    out
}
