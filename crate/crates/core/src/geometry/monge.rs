//! Local quadratic height graphs over a vertex's tangent plane.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::Serialize;

use super::mesh::SurfaceMesh;
use super::Vec3;
use crate::error::{Error, Result};

const FRAME_ITERATIONS: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct MongePatch {
    pub origin: Vec3,
    pub tangent: [Vec3; 2],
    /// Outward unit normal; heights are measured along it.
    pub normal: Vec3,
    /// Height `c0 + c1 x + c2 y + c3 x² + c4 xy + c5 y²` in the tangent frame.
    pub coeffs: [f64; 6],
    pub rms_residual: f64,
    /// Principal curvatures, ascending; positive where the surface bends
    /// away from the normal (convex bodies).
    pub principal: [f64; 2],
    pub low_confidence: bool,
    pub samples: usize,
}

impl MongePatch {
    pub fn mean_curvature(&self) -> f64 {
        0.5 * (self.principal[0] + self.principal[1])
    }
}

fn frame(n: &Vec3) -> [Vec3; 2] {
    let seed = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = (seed - n * seed.dot(n)).normalize();
    [t1, n.cross(&t1)]
}

/// Vertices reachable from `v` through edges while staying within `radius`.
fn gather(mesh: &SurfaceMesh, v: usize, radius: f64) -> Vec<usize> {
    let adj = mesh.vertex_neighbors();
    let p = mesh.vertex(v);
    let mut seen = vec![false; mesh.vertices().len()];
    seen[v] = true;
    let mut out = vec![v];
    let mut queue = VecDeque::from([v]);
    while let Some(k) = queue.pop_front() {
        for &j in &adj[k] {
            if !seen[j] && (mesh.vertex(j) - p).norm() <= radius {
                seen[j] = true;
                out.push(j);
                queue.push_back(j);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Least-squares quadratic graph over the tangent plane at `vertex`.
///
/// The frame starts from the area-weighted vertex normal and is re-tilted by
/// the fitted gradient until the linear coefficients vanish.
pub fn monge_patch(mesh: &SurfaceMesh, vertex: usize, radius: f64) -> Result<MongePatch> {
    let pts = gather(mesh, vertex, radius);
    if pts.len() < 7 {
        return Err(Error::RankDeficient(format!(
            "vertex {vertex} has {} neighbors within {radius}, need 6",
            pts.len() - 1
        )));
    }
    let origin = mesh.vertex(vertex);
    let mut normal = mesh.vertex_normals()[vertex];
    let mut fit = None;
    for _ in 0..FRAME_ITERATIONS {
        let t = frame(&normal);
        let (coeffs, rms) = fit_quadratic(mesh, &pts, origin, &t, &normal)?;
        let g = t[0] * coeffs[1] + t[1] * coeffs[2];
        fit = Some((t, coeffs, rms));
        if g.norm() < 1e-14 {
            break;
        }
        normal = (normal - g).normalize();
    }
    let (tangent, coeffs, rms) = fit.expect("at least one iteration");
    let grad = nalgebra::Vector2::new(coeffs[1], coeffs[2]);
    let w = (1.0 + grad.norm_squared()).sqrt();
    let hess = Matrix2::new(2.0 * coeffs[3], coeffs[4], coeffs[4], 2.0 * coeffs[5]);
    let first = Matrix2::identity() + grad * grad.transpose();
    let shape = -(first.try_inverse().expect("positive definite") * hess) / w;
    let sym = 0.5 * (shape + shape.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut principal = [eig.eigenvalues[0], eig.eigenvalues[1]];
    principal.sort_by(f64::total_cmp);
    Ok(MongePatch {
        origin,
        tangent,
        normal,
        coeffs,
        rms_residual: rms,
        principal,
        low_confidence: rms > 1e-2 * radius,
        samples: pts.len(),
    })
}

fn fit_quadratic(mesh: &SurfaceMesh, pts: &[usize], origin: Vec3, t: &[Vec3; 2], n: &Vec3) -> Result<([f64; 6], f64)> {
    let m = pts.len();
    let mut a = DMatrix::zeros(m, 6);
    let mut b = DVector::zeros(m);
    for (r, &k) in pts.iter().enumerate() {
        let d = mesh.vertex(k) - origin;
        let (x, y) = (d.dot(&t[0]), d.dot(&t[1]));
        for (c, v) in [1.0, x, y, x * x, x * y, y * y].into_iter().enumerate() {
            a[(r, c)] = v;
        }
        b[r] = d.dot(n);
    }
    let svd = a.clone().svd(true, true);
    if svd.singular_values.min() <= 1e-10 * svd.singular_values.max() {
        return Err(Error::RankDeficient("neighbors do not determine a quadratic".into()));
    }
    let c = svd.solve(&b, 0.0).map_err(|e| Error::RankDeficient(e.to_string()))?;
    let res = &a * &c - &b;
    let rms = (res.norm_squared() / m as f64).sqrt();
    Ok(([c[0], c[1], c[2], c[3], c[4], c[5]], rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::BoundaryLoop;
    use crate::geometry::{shapes, Slab};

    /// Graph of `f` over a square grid, boundary on the plates is faked by
    /// a slab tall enough and no loops; only the interior vertex is queried.
    fn graph_patch(f: impl Fn(f64, f64) -> f64, h: f64, m: usize) -> (SurfaceMesh, usize) {
        let n = 2 * m + 1;
        let mut verts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (x, y) = ((i as f64 - m as f64) * h, (j as f64 - m as f64) * h);
                verts.push(Vec3::new(x, y, f(x, y)));
            }
        }
        let mut faces = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = j * n + i;
                faces.push([a, a + 1, a + n + 1]);
                faces.push([a, a + n + 1, a + n]);
            }
        }
        let mut ring = Vec::new();
        ring.extend((0..n).map(|i| i));
        ring.extend((1..n).map(|j| j * n + n - 1));
        ring.extend((0..n - 1).rev().map(|i| (n - 1) * n + i));
        ring.extend((1..n - 1).rev().map(|j| j * n));
        let slab = Slab::horizontal(-10.0, 10.0).unwrap();
        // Loops are only checked against plates; place the rim on plate 1 by
        // a dedicated builder below rather than here.
        let mesh = SurfaceMesh::from_parts(verts, faces, vec![BoundaryLoop { vertices: ring, plate: 1 }], slab);
        (mesh, m * n + m)
    }

    #[test]
    fn flat_patch_has_zero_quadratic_terms() {
        let (mesh, v) = graph_patch(|x, y| 0.3 * x - 0.2 * y + 1.0, 0.1, 3);
        let p = monge_patch(&mesh, v, 0.25).unwrap();
        for c in &p.coeffs[3..] {
            assert!(c.abs() < 1e-10);
        }
        assert!(p.principal.iter().all(|k| k.abs() < 1e-10));
    }

    #[test]
    fn exact_quadratic_is_reproduced() {
        let (a, b, c) = (0.7, -0.4, 1.3);
        let (mesh, v) = graph_patch(|x, y| a * x * x + b * x * y + c * y * y, 0.05, 3);
        let p = monge_patch(&mesh, v, 0.12).unwrap();
        // Normal is +z up to orientation of the synthetic faces.
        let s = p.normal.z.signum();
        assert!((p.coeffs[3] - s * a).abs() < 1e-9, "{:?}", p.coeffs);
        assert!((p.coeffs[4] - s * b * p.tangent[0].x * p.tangent[1].y).abs() < 1e-9);
        assert!((p.coeffs[5] - s * c).abs() < 1e-9);
    }

    #[test]
    fn sphere_curvatures_are_inverse_radius() {
        let slab = Slab::horizontal(-2.0, 2.0).unwrap();
        let r = 0.8;
        let mesh = shapes::uv_sphere(&slab, Vec3::zeros(), r, 96, 48).unwrap();
        let hh = mesh.mesh_h();
        for v in (0..mesh.vertices().len()).step_by(97) {
            let z = mesh.vertex(v).z;
            if z.abs() > 0.7 * r {
                continue;
            }
            let p = monge_patch(&mesh, v, 2.5 * hh).unwrap();
            for k in p.principal {
                assert!((k - 1.0 / r).abs() < 3.0 * hh, "k = {k}, h = {hh}");
            }
        }
    }

    #[test]
    fn cylinder_curvatures_are_zero_and_inverse_radius() {
        let slab = Slab::horizontal(0.0, 1.0).unwrap();
        let r = 0.5;
        let mesh = shapes::cylinder(&slab, Vec3::zeros(), r, 96, 40).unwrap();
        let hh = mesh.mesh_h();
        let v = mesh
            .vertices()
            .iter()
            .position(|p| (p.z - 0.5).abs() < 1e-9)
            .unwrap();
        let p = monge_patch(&mesh, v, 2.5 * hh).unwrap();
        assert!(p.principal[0].abs() < 2.0 * hh);
        assert!((p.principal[1] - 1.0 / r).abs() < 2.0 * hh);
    }

    #[test]
    fn too_few_neighbors_is_rank_deficient() {
        let slab = Slab::horizontal(0.0, 1.0).unwrap();
        let mesh = shapes::cylinder(&slab, Vec3::zeros(), 0.5, 24, 6).unwrap();
        assert!(matches!(monge_patch(&mesh, 0, 1e-6), Err(Error::RankDeficient(_))));
    }
}
