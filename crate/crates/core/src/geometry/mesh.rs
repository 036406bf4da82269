//! Triangle meshes with boundary loops lying on the slab plates.

use std::collections::BTreeMap;

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::slab::{reflect, Plane, Slab};
use super::Vec3;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
    pub plate: u8,
}

/// A compact triangulated surface `M` in a slab.
///
/// Faces are oriented so that normals point out of the enclosed body, where
/// the body is bounded by `M` together with the plate regions spanned by the
/// boundary loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    loops: Vec<BoundaryLoop>,
    slab: Slab,
}

/// Closing triangle of a plate region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapTriangle {
    pub corners: [Vec3; 3],
    pub plate: u8,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl SurfaceMesh {
    /// Build and validate a mesh; faces are reoriented outward if needed.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, loops: Vec<BoundaryLoop>, slab: Slab) -> Result<Self> {
        slab.axis3()?;
        let mut mesh = Self { vertices, faces, loops, slab };
        mesh.validate()?;
        if mesh.enclosed_volume() < 0.0 {
            mesh.flip();
        }
        Ok(mesh)
    }

    /// Skip validation; for meshes derived from a validated one by an isometry.
    pub(crate) fn from_parts(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, loops: Vec<BoundaryLoop>, slab: Slab) -> Self {
        Self { vertices, faces, loops, slab }
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.faces.is_empty() {
            return Err(Error::invalid("mesh has no faces"));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(format!("vertex {i} is not finite")));
        }
        for (f, face) in self.faces.iter().enumerate() {
            if face.iter().any(|&v| v >= nv) || face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::invalid(format!("face {f} has invalid vertex indices {face:?}")));
            }
        }
        let counts = self.edge_face_counts();
        if let Some((e, c)) = counts.iter().find(|(_, &c)| c > 2) {
            return Err(Error::invalid(format!("edge {e:?} borders {c} faces")));
        }
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for face in &self.faces {
            for i in 0..3 {
                *directed.entry((face[i], face[(i + 1) % 3])).or_default() += 1;
            }
        }
        if let Some((e, _)) = directed.iter().find(|(_, &c)| c > 1) {
            return Err(Error::invalid(format!("edge {e:?} is traversed twice in the same direction")));
        }
        let boundary: usize = counts.values().filter(|&&c| c == 1).count();
        let loop_edges: usize = self.loops.iter().map(|l| l.vertices.len()).sum();
        if boundary != loop_edges {
            return Err(Error::invalid(format!(
                "mesh has {boundary} boundary edges but its loops list {loop_edges}"
            )));
        }
        let diam = self.diameter().max(f64::MIN_POSITIVE);
        for (li, lp) in self.loops.iter().enumerate() {
            if lp.plate != 1 && lp.plate != 2 {
                return Err(Error::invalid(format!("loop {li} has plate id {}", lp.plate)));
            }
            if lp.vertices.len() < 3 {
                return Err(Error::invalid(format!("loop {li} has fewer than three vertices")));
            }
            let offset = self.slab.plate_offset(lp.plate);
            for (i, &v) in lp.vertices.iter().enumerate() {
                let w = lp.vertices[(i + 1) % lp.vertices.len()];
                if counts.get(&edge_key(v, w)) != Some(&1) {
                    return Err(Error::invalid(format!("loop {li} edge ({v}, {w}) is not a boundary edge")));
                }
                let gap = (self.slab.height(&self.vertices[v]) - offset).abs();
                if gap > 1e-9 * diam {
                    return Err(Error::invalid(format!(
                        "loop {li} vertex {v} is {gap:e} away from plate {}",
                        lp.plate
                    )));
                }
            }
        }
        let tol = 1e-9 * diam;
        if let Some(i) = self.vertices.iter().position(|v| !self.slab.contains(v, tol)) {
            return Err(Error::invalid(format!("vertex {i} lies outside the slab")));
        }
        Ok(())
    }

    fn edge_face_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for face in &self.faces {
            for i in 0..3 {
                *counts.entry(edge_key(face[i], face[(i + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn loops(&self) -> &[BoundaryLoop] {
        &self.loops
    }

    pub fn slab(&self) -> &Slab {
        &self.slab
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal; its length is twice the face area.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_cross(f).normalize()
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for (f, face) in self.faces.iter().enumerate() {
            let n = self.face_cross(f);
            for &v in face {
                acc[v] += n;
            }
        }
        acc.into_iter().map(|n| if n.norm() > 0.0 { n.normalize() } else { n }).collect()
    }

    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Mean edge length.
    pub fn mesh_h(&self) -> f64 {
        let counts = self.edge_face_counts();
        let total: f64 = counts.keys().map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm()).sum();
        total / counts.len() as f64
    }

    pub fn max_edge(&self) -> f64 {
        self.edge_face_counts()
            .keys()
            .map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    /// Sorted vertex adjacency lists.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for face in &self.faces {
            for i in 0..3 {
                let (a, b) = (face[i], face[(i + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Plate id for vertices on a boundary loop.
    pub fn vertex_plates(&self) -> Vec<Option<u8>> {
        let mut out = vec![None; self.vertices.len()];
        for lp in &self.loops {
            for &v in &lp.vertices {
                out[v] = Some(lp.plate);
            }
        }
        out
    }

    /// Triangles closing each boundary loop inside its plate.
    ///
    /// Each loop is fanned from its centroid, which assumes the loop is
    /// star-shaped about that point. Winding matches the mesh so the closed
    /// surface is consistently oriented.
    pub fn plate_caps(&self) -> Vec<CapTriangle> {
        let mut dir: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for face in &self.faces {
            for i in 0..3 {
                dir.insert((face[i], face[(i + 1) % 3]), ());
            }
        }
        let mut caps = Vec::new();
        for lp in &self.loops {
            let n = lp.vertices.len();
            let c = lp.vertices.iter().map(|&v| self.vertices[v]).sum::<Vec3>() / n as f64;
            for i in 0..n {
                let (a, b) = (lp.vertices[i], lp.vertices[(i + 1) % n]);
                // The cap traverses each boundary edge opposite to the mesh.
                let (p, q) = if dir.contains_key(&(a, b)) { (b, a) } else { (a, b) };
                caps.push(CapTriangle { corners: [self.vertices[p], self.vertices[q], c], plate: lp.plate });
            }
        }
        caps
    }

    /// Signed volume of the closed surface `M` plus plate caps.
    ///
    /// Positive when faces point out of the body.
    pub fn enclosed_volume(&self) -> f64 {
        let c = self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64;
        let tet = |a: Vec3, b: Vec3, d: Vec3| (a - c).dot(&(b - c).cross(&(d - c))) / 6.0;
        let mesh: f64 = (0..self.faces.len())
            .map(|f| {
                let [a, b, d] = self.triangle(f);
                tet(a, b, d)
            })
            .sum();
        let caps: f64 = self.plate_caps().iter().map(|t| tet(t.corners[0], t.corners[1], t.corners[2])).sum();
        mesh + caps
    }

    fn flip(&mut self) {
        for face in &mut self.faces {
            face.swap(1, 2);
        }
    }

    /// Mirror image across `plane`, with winding reversed to stay outward.
    ///
    /// The plane must be orthogonal to the plates so the slab is preserved.
    pub fn reflected(&self, plane: &Plane) -> Result<SurfaceMesh> {
        let axis = self.slab.axis3()?;
        let tilt = plane.normal.dot(&axis);
        if tilt.abs() > 1e-12 {
            return Err(Error::Orientation(tilt));
        }
        let vertices = self.vertices.iter().map(|v| reflect(v, plane)).collect();
        let faces = self.faces.iter().map(|f| [f[0], f[2], f[1]]).collect();
        Ok(Self::from_parts(vertices, faces, self.loops.clone(), self.slab.clone()))
    }

    /// Rigid motion about the slab axis: rotation by `angle` followed by a
    /// translation parallel to the plates.
    pub fn moved(&self, angle: f64, shift: Vec3) -> Result<SurfaceMesh> {
        let axis = self.slab.axis3()?;
        let tilt = shift.dot(&axis);
        if tilt.abs() > 1e-12 * (1.0 + shift.norm()) {
            return Err(Error::Orientation(tilt));
        }
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let vertices = self.vertices.iter().map(|v| rot * v + shift).collect();
        Ok(Self::from_parts(vertices, self.faces.clone(), self.loops.clone(), self.slab.clone()))
    }

    /// Same connectivity with displaced vertices; revalidated.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<SurfaceMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::invalid("vertex count changed"));
        }
        let mesh = Self::from_parts(vertices, self.faces.clone(), self.loops.clone(), self.slab.clone());
        mesh.validate()?;
        Ok(mesh)
    }
}
