//! The body bounded by a mesh and its plate caps, as seen by point queries.

use rayon::prelude::*;

use crate::geometry::bvh::{Bvh, Nearest};
use crate::geometry::{SurfaceMesh, Vec3};

/// Fixed ray directions for the parity vote; none lies in a coordinate
/// plane, so rays avoid running along mesh rows and plate caps.
const RAYS: [[f64; 3]; 3] = [
    [0.5734, 0.8112, 0.1153],
    [-0.7071, 0.3162, -0.6325],
    [0.2236, -0.8944, 0.3873],
];

pub(crate) struct Body<'a> {
    pub mesh: &'a SurfaceMesh,
    /// Triangles of the mesh alone.
    pub surface: Bvh,
    /// Mesh triangles followed by plate cap triangles.
    closed: Bvh,
    pub normals: Vec<Vec3>,
    pub plates: Vec<Option<u8>>,
    pub axis: Vec3,
    pub h: f64,
    /// Boundary loops as closed polygons in plate coordinates, by plate.
    loops: Vec<(u8, Vec<[f64; 2]>)>,
    basis: (Vec3, Vec3),
}

/// Signed distance of a reflected vertex to the mesh, positive inside.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Probe {
    pub vertex: usize,
    pub point: Vec3,
    pub clearance: f64,
    /// Reflected normal agrees with the normal at the foot.
    pub agrees: bool,
}

impl<'a> Body<'a> {
    pub fn new(mesh: &'a SurfaceMesh) -> crate::error::Result<Self> {
        let tris: Vec<[Vec3; 3]> = (0..mesh.faces().len()).map(|f| mesh.triangle(f)).collect();
        let mut closed = tris.clone();
        closed.extend(mesh.plate_caps().iter().map(|c| c.corners));
        let basis = mesh.slab().plate_basis()?;
        let to2 = |p: Vec3| [p.dot(&basis.0), p.dot(&basis.1)];
        let loops = mesh
            .loops()
            .iter()
            .map(|l| (l.plate, l.vertices.iter().map(|&v| to2(mesh.vertex(v))).collect()))
            .collect();
        Ok(Self {
            mesh,
            loops,
            basis,
            surface: Bvh::new(tris),
            closed: Bvh::new(closed),
            normals: mesh.vertex_normals(),
            plates: mesh.vertex_plates(),
            axis: mesh.slab().axis3()?,
            h: mesh.mesh_h(),
        })
    }

    /// Majority vote of ray parities against the closed surface.
    pub fn inside(&self, p: &Vec3) -> bool {
        let odd = RAYS
            .iter()
            .filter(|d| {
                let d = Vec3::new(d[0], d[1], d[2]).normalize();
                self.closed.ray_hits(p, &d).len() % 2 == 1
            })
            .count();
        odd >= 2
    }

    pub fn nearest(&self, p: &Vec3) -> Nearest {
        self.surface.nearest(p)
    }

    /// Signed distance of `q` to the boundary of the plate region spanned by
    /// the loops on `plate`, positive inside.
    fn plate_clearance(&self, plate: u8, q: [f64; 2]) -> f64 {
        let mut inside = false;
        let mut dist = f64::INFINITY;
        for (_, poly) in self.loops.iter().filter(|(p, _)| *p == plate) {
            for i in 0..poly.len() {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                if (a[1] > q[1]) != (b[1] > q[1]) && q[0] < a[0] + (q[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
                    inside = !inside;
                }
                let ab = [b[0] - a[0], b[1] - a[1]];
                let len2 = ab[0] * ab[0] + ab[1] * ab[1];
                let t = if len2 > 0.0 { (((q[0] - a[0]) * ab[0] + (q[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
                dist = dist.min((q[0] - a[0] - t * ab[0]).hypot(q[1] - a[1] - t * ab[1]));
            }
        }
        if inside {
            dist
        } else {
            -dist
        }
    }

    /// Reflect each listed vertex across `{x . e = offset}` and measure its
    /// clearance. Points on a plate are nudged into the slab first, so the
    /// parity test does not sit on a cap.
    pub fn probes(&self, vertices: &[usize], e: &Vec3, offset: f64, agreement: f64) -> Vec<Probe> {
        let nudge = 1e-7 * self.h;
        vertices
            .par_iter()
            .map(|&v| {
                let x = self.mesh.vertex(v);
                let s = x.dot(e) - offset;
                let mut p = x - e * (2.0 * s);
                if let Some(plate) = self.plates[v] {
                    let dir = if plate == 1 { 1.0 } else { -1.0 };
                    p += self.axis * (dir * nudge);
                }
                let n = self.normals[v];
                let nr = n - e * (2.0 * n.dot(e));
                let near = self.nearest(&p);
                let foot_n = self.mesh.face_normal(near.triangle);
                // Boundary vertices stay on their plate under the reflection;
                // whether they touch is decided inside the plate, where a
                // shallow contact angle cannot fake a near miss.
                let clearance = match self.plates[v] {
                    Some(plate) => self.plate_clearance(plate, [p.dot(&self.basis.0), p.dot(&self.basis.1)]),
                    None => {
                        let sign = if self.inside(&p) { 1.0 } else { -1.0 };
                        sign * near.distance
                    }
                };
                Probe { vertex: v, point: p, clearance, agrees: nr.dot(&foot_n) > agreement }
            })
            .collect()
    }
}
