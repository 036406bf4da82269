//! Mesh builders: analytic test bodies and meshes of graph solutions.

use std::f64::consts::TAU;

use super::mesh::{BoundaryLoop, SurfaceMesh};
use super::region::Shape2;
use super::slab::Slab;
use super::Vec3;
use crate::error::{Error, Result};

fn horizontal(slab: &Slab, x: f64, y: f64, z: f64) -> Result<Vec3> {
    let axis = slab.axis3()?;
    if (axis - Vec3::z()).norm() > 1e-12 {
        return Err(Error::invalid("mesh builders expect the slab axis to be e3"));
    }
    Ok(Vec3::new(x, y, z))
}

/// Quad strips between rows of equal length, closed around.
fn strip_faces(faces: &mut Vec<[usize; 3]>, lower: &[usize], upper: &[usize]) {
    let n = lower.len();
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push([lower[i], lower[j], upper[j]]);
        faces.push([lower[i], upper[j], upper[i]]);
    }
}

/// Triangles between an inner and an outer ring whose vertices are listed by
/// increasing angle starting at angle `start`.
fn zipper_faces(faces: &mut Vec<[usize; 3]>, inner: &[(usize, f64)], outer: &[(usize, f64)]) {
    let (a, b) = (inner.len(), outer.len());
    let ang = |ring: &[(usize, f64)], k: usize| {
        let n = ring.len();
        ring[k % n].1 + if k >= n { TAU } else { 0.0 }
    };
    let (mut i, mut j) = (0usize, 0usize);
    while i < a || j < b {
        let advance_outer = j < b && (i >= a || ang(outer, j + 1) <= ang(inner, i + 1) + 1e-12);
        if advance_outer {
            faces.push([inner[i % a].0, outer[j % b].0, outer[(j + 1) % b].0]);
            j += 1;
        } else {
            faces.push([inner[i % a].0, outer[j % b].0, inner[(i + 1) % a].0]);
            i += 1;
        }
    }
}

/// Closed latitude-longitude sphere (no boundary loops).
pub fn uv_sphere(slab: &Slab, center: Vec3, r: f64, n_lon: usize, n_lat: usize) -> Result<SurfaceMesh> {
    ellipsoid(slab, center, [r, r, r], n_lon, n_lat)
}

/// Closed latitude-longitude ellipsoid with semi-axes along e1, e2, e3.
pub fn ellipsoid(slab: &Slab, center: Vec3, radii: [f64; 3], n_lon: usize, n_lat: usize) -> Result<SurfaceMesh> {
    if n_lon < 3 || n_lat < 2 {
        return Err(Error::invalid("sphere needs at least 3 longitudes and 2 latitude bands"));
    }
    let mut v = vec![horizontal(slab, center.x, center.y, center.z - radii[2])?];
    let mut rows = Vec::new();
    for k in 1..n_lat {
        let phi = std::f64::consts::PI * k as f64 / n_lat as f64;
        let (s, c) = phi.sin_cos();
        let row: Vec<usize> = (0..n_lon)
            .map(|i| {
                let th = TAU * i as f64 / n_lon as f64;
                v.push(center + Vec3::new(radii[0] * s * th.cos(), radii[1] * s * th.sin(), -radii[2] * c));
                v.len() - 1
            })
            .collect();
        rows.push(row);
    }
    v.push(center + Vec3::new(0.0, 0.0, radii[2]));
    let top = v.len() - 1;
    let mut faces = Vec::new();
    let first = &rows[0];
    for i in 0..n_lon {
        faces.push([0, first[(i + 1) % n_lon], first[i]]);
    }
    for w in rows.windows(2) {
        strip_faces(&mut faces, &w[0], &w[1]);
    }
    let last = rows.last().expect("at least one row");
    for i in 0..n_lon {
        faces.push([last[i], last[(i + 1) % n_lon], top]);
    }
    SurfaceMesh::new(v, faces, Vec::new(), slab.clone())
}

/// Surface of revolution about the vertical line through `center` from a
/// meridian `(radius, height)` running from plate 1 to plate 2.
pub fn revolve(slab: &Slab, center: [f64; 2], profile: &[(f64, f64)], n_theta: usize) -> Result<SurfaceMesh> {
    if profile.len() < 2 || n_theta < 3 {
        return Err(Error::invalid("revolution needs two profile points and three angles"));
    }
    if let Some(p) = profile.iter().find(|p| !(p.0 > 0.0)) {
        return Err(Error::invalid(format!("profile radius must stay positive, got {}", p.0)));
    }
    let mut v = Vec::new();
    let mut rows = Vec::new();
    let last = profile.len() - 1;
    for (k, &(r, z)) in profile.iter().enumerate() {
        // Snap the end rows onto the plates exactly.
        let z = match k {
            0 => slab.offset_lo,
            _ if k == last => slab.offset_hi,
            _ => z,
        };
        let row: Vec<usize> = (0..n_theta)
            .map(|i| {
                let th = TAU * i as f64 / n_theta as f64;
                v.push(Vec3::new(center[0] + r * th.cos(), center[1] + r * th.sin(), z));
                v.len() - 1
            })
            .collect();
        rows.push(row);
    }
    let mut faces = Vec::new();
    for w in rows.windows(2) {
        strip_faces(&mut faces, &w[0], &w[1]);
    }
    let loops = vec![
        BoundaryLoop { vertices: rows[0].clone(), plate: 1 },
        BoundaryLoop { vertices: rows[last].clone(), plate: 2 },
    ];
    horizontal(slab, 0.0, 0.0, 0.0)?;
    SurfaceMesh::new(v, faces, loops, slab.clone())
}

/// Right circular cylinder spanning the slab.
pub fn cylinder(slab: &Slab, center: Vec3, r: f64, n_theta: usize, n_z: usize) -> Result<SurfaceMesh> {
    let (lo, hi) = (slab.offset_lo, slab.offset_hi);
    let profile: Vec<(f64, f64)> = (0..=n_z.max(1)).map(|k| (r, lo + (hi - lo) * k as f64 / n_z.max(1) as f64)).collect();
    revolve(slab, [center.x, center.y], &profile, n_theta)
}

/// Tube whose plate-2 circle is shifted horizontally by `shift` relative to
/// the plate-1 circle, with radial bulge `bulge * sin(pi s)` at fraction `s`
/// of the height.
pub fn sheared_drum(slab: &Slab, r: f64, shift: [f64; 2], bulge: f64, n_theta: usize, n_z: usize) -> Result<SurfaceMesh> {
    let (lo, hi) = (slab.offset_lo, slab.offset_hi);
    let mut v = Vec::new();
    let mut rows = Vec::new();
    for k in 0..=n_z {
        let s = k as f64 / n_z as f64;
        let z = if k == n_z { hi } else { lo + (hi - lo) * s };
        let rr = r + bulge * (std::f64::consts::PI * s).sin();
        let row: Vec<usize> = (0..n_theta)
            .map(|i| {
                let th = TAU * i as f64 / n_theta as f64;
                v.push(Vec3::new(s * shift[0] + rr * th.cos(), s * shift[1] + rr * th.sin(), z));
                v.len() - 1
            })
            .collect();
        rows.push(row);
    }
    let mut faces = Vec::new();
    for w in rows.windows(2) {
        strip_faces(&mut faces, &w[0], &w[1]);
    }
    let loops = vec![
        BoundaryLoop { vertices: rows[0].clone(), plate: 1 },
        BoundaryLoop { vertices: rows[n_z].clone(), plate: 2 },
    ];
    SurfaceMesh::new(v, faces, loops, slab.clone())
}

/// Angular count for a ring of the given circumference: a multiple of 16 so
/// that the ring is invariant under reflections across lines at multiples of
/// 22.5 degrees through its center.
pub fn ring_count(circumference: f64, spacing: f64) -> usize {
    (((circumference / spacing) / 16.0).ceil() as usize).max(1) * 16
}

/// Graph `z = height(x, y)` over a star-shaped domain, closed into a column
/// by a vertical wall down to plate 1 (dome) or up to plate 2 (bowl).
///
/// Ring `k` of `m` sits at fraction `k/m` of the way from `center` to the
/// boundary and carries `8k` vertices, the outer ring a multiple of 16.
pub fn graph_column(
    slab: &Slab,
    outer: &Shape2,
    center: [f64; 2],
    spacing: f64,
    height: impl Fn([f64; 2]) -> Result<f64>,
) -> Result<SurfaceMesh> {
    let rays = |n: usize| -> Result<Vec<[f64; 2]>> {
        (0..n)
            .map(|i| {
                outer
                    .ray_exit(center, TAU * i as f64 / n as f64)
                    .ok_or_else(|| Error::invalid("domain is not star-shaped about its center"))
            })
            .collect()
    };
    let probe = rays(64)?;
    let mean_r = probe.iter().map(|p| (p[0] - center[0]).hypot(p[1] - center[1])).sum::<f64>() / 64.0;
    let m = ((mean_r / spacing).ceil() as usize).max(2);
    let outer_n = ring_count(TAU * mean_r, spacing).max(8 * m);
    let mut v = vec![Vec3::new(center[0], center[1], height(center)?)];
    let mut rings: Vec<Vec<(usize, f64)>> = vec![vec![(0, 0.0)]];
    for k in 1..=m {
        let n = if k == m { outer_n } else { (8 * k).min(outer_n) };
        let bnd = rays(n)?;
        let f = k as f64 / m as f64;
        let mut ring = Vec::with_capacity(n);
        for (i, b) in bnd.iter().enumerate() {
            let p = if k == m { *b } else { [center[0] + f * (b[0] - center[0]), center[1] + f * (b[1] - center[1])] };
            v.push(Vec3::new(p[0], p[1], height(p)?));
            ring.push((v.len() - 1, TAU * i as f64 / n as f64));
        }
        rings.push(ring);
    }
    let mut faces = Vec::new();
    let first = &rings[1];
    for i in 0..first.len() {
        faces.push([0, first[i].0, first[(i + 1) % first.len()].0]);
    }
    for k in 1..m {
        zipper_faces(&mut faces, &rings[k], &rings[k + 1]);
    }
    let rim: Vec<usize> = rings[m].iter().map(|r| r.0).collect();
    let mean_all = v.iter().map(|p| p.z).sum::<f64>() / v.len() as f64;
    let mean_rim = rim.iter().map(|&i| v[i].z).sum::<f64>() / rim.len() as f64;
    let (plate, z_plate) = if mean_rim <= mean_all { (1u8, slab.offset_lo) } else { (2u8, slab.offset_hi) };
    let layers = (((mean_rim - z_plate).abs() / spacing).round() as usize).max(1);
    let mut prev = rim;
    for l in 1..=layers {
        let f = l as f64 / layers as f64;
        let next: Vec<usize> = rings[m]
            .iter()
            .map(|&(i, _)| {
                let z0 = v[i].z;
                let z = if l == layers { z_plate } else { z0 + (z_plate - z0) * f };
                v.push(Vec3::new(v[i].x, v[i].y, z));
                v.len() - 1
            })
            .collect();
        strip_faces(&mut faces, &next, &prev);
        prev = next;
    }
    let loops = vec![BoundaryLoop { vertices: prev, plate }];
    SurfaceMesh::new(v, faces, loops, slab.clone())
}

/// Graph over the region between `inner` (on plate 1) and `outer` (on plate
/// 2), both star-shaped about `center`. Rings are blends of the two curves
/// with a common angular count, so the mesh inherits any mirror symmetry of
/// the curves about a line through `center` at angle `start`.
pub fn annulus_graph(
    slab: &Slab,
    inner: &Shape2,
    outer: &Shape2,
    center: [f64; 2],
    start: f64,
    spacing: f64,
    height: impl Fn([f64; 2]) -> Result<f64>,
) -> Result<SurfaceMesh> {
    let exit = |s: &Shape2, th: f64| {
        s.ray_exit(center, th).ok_or_else(|| Error::invalid("annulus curves are not star-shaped about the center"))
    };
    let probe: Vec<f64> = (0..64)
        .map(|i| {
            let th = start + TAU * i as f64 / 64.0;
            let (a, b) = (exit(inner, th)?, exit(outer, th)?);
            Ok((b[0] - a[0]).hypot(b[1] - a[1]))
        })
        .collect::<Result<_>>()?;
    let gap = probe.iter().sum::<f64>() / 64.0;
    let m = ((gap / spacing).ceil() as usize).max(2);
    let perimeter: f64 = (0..64)
        .map(|i| {
            let a = exit(outer, start + TAU * i as f64 / 64.0)?;
            let b = exit(outer, start + TAU * (i + 1) as f64 / 64.0)?;
            Ok((b[0] - a[0]).hypot(b[1] - a[1]))
        })
        .sum::<Result<f64>>()?;
    let n = ring_count(perimeter, spacing);
    let mut v = Vec::new();
    let mut rows: Vec<Vec<usize>> = vec![Vec::with_capacity(n); m + 1];
    for i in 0..n {
        let th = start + TAU * i as f64 / n as f64;
        let (a, b) = (exit(inner, th)?, exit(outer, th)?);
        for (k, row) in rows.iter_mut().enumerate() {
            let f = k as f64 / m as f64;
            let p = [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
            let z = match k {
                0 => slab.offset_lo,
                _ if k == m => slab.offset_hi,
                _ => height(p)?,
            };
            v.push(Vec3::new(p[0], p[1], z));
            row.push(v.len() - 1);
        }
    }
    let mut faces = Vec::new();
    for w in rows.windows(2) {
        strip_faces(&mut faces, &w[0], &w[1]);
    }
    let loops = vec![
        BoundaryLoop { vertices: rows[0].clone(), plate: 1 },
        BoundaryLoop { vertices: rows[m].clone(), plate: 2 },
    ];
    SurfaceMesh::new(v, faces, loops, slab.clone())
}

/// Push non-boundary vertices along their normals by a Gaussian bump of the
/// given amplitude and width centered at `at`.
pub fn bump(mesh: &SurfaceMesh, at: Vec3, amplitude: f64, width: f64) -> Result<SurfaceMesh> {
    let normals = mesh.vertex_normals();
    let plates = mesh.vertex_plates();
    let vertices = mesh
        .vertices()
        .iter()
        .zip(&normals)
        .zip(&plates)
        .map(|((p, n), plate)| {
            if plate.is_some() {
                return *p;
            }
            let g = (-(p - at).norm_squared() / (2.0 * width * width)).exp();
            p + n * (amplitude * g)
        })
        .collect();
    mesh.with_vertices(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_volume_and_closure() {
        let slab = Slab::horizontal(-1.0, 1.0).unwrap();
        let m = uv_sphere(&slab, Vec3::zeros(), 0.5, 64, 32).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!((m.enclosed_volume() - exact).abs() / exact < 0.01);
        assert!(m.loops().is_empty());
    }

    #[test]
    fn column_over_a_disk_is_closed_by_its_plate() {
        let slab = Slab::horizontal(0.0, 1.0).unwrap();
        let disk = Shape2::circle([0.0, 0.0], 0.5);
        let m = graph_column(&slab, &disk, [0.0, 0.0], 0.05, |p| Ok(0.8 - p[0] * p[0] - p[1] * p[1])).unwrap();
        assert_eq!(m.loops().len(), 1);
        assert_eq!(m.loops()[0].plate, 1);
        // Volume of the paraboloid column: integral of (0.8 - r^2) over the disk.
        let exact = std::f64::consts::PI * (0.8 * 0.25 - 0.5 * 0.0625);
        assert!((m.enclosed_volume() - exact).abs() / exact < 0.02, "{}", m.enclosed_volume());
    }

    #[test]
    fn bowl_column_walls_go_to_the_upper_plate() {
        let slab = Slab::horizontal(0.0, 1.0).unwrap();
        let disk = Shape2::circle([0.0, 0.0], 0.5);
        let m = graph_column(&slab, &disk, [0.0, 0.0], 0.05, |p| Ok(0.2 + p[0] * p[0] + p[1] * p[1])).unwrap();
        assert_eq!(m.loops()[0].plate, 2);
        assert!(m.enclosed_volume() > 0.0);
    }

    #[test]
    fn annulus_graph_spans_both_plates() {
        let slab = Slab::horizontal(0.0, 0.5).unwrap();
        let inner = Shape2::circle([0.0, 0.0], 0.2);
        let outer = Shape2::circle([0.0, 0.0], 0.6);
        let m = annulus_graph(&slab, &inner, &outer, [0.0, 0.0], 0.0, 0.05, |p| {
            Ok(0.5 * ((p[0] * p[0] + p[1] * p[1]).sqrt() - 0.2) / 0.4)
        })
        .unwrap();
        let plates: Vec<u8> = m.loops().iter().map(|l| l.plate).collect();
        assert_eq!(plates, vec![1, 2]);
        assert!(m.enclosed_volume() > 0.0);
    }

    #[test]
    fn bump_moves_only_free_vertices() {
        let slab = Slab::horizontal(0.0, 1.0).unwrap();
        let m = cylinder(&slab, Vec3::zeros(), 0.5, 32, 8).unwrap();
        let b = bump(&m, Vec3::new(0.5, 0.0, 0.5), 0.05, 0.1).unwrap();
        let moved = m.vertices().iter().zip(b.vertices()).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
        assert!((moved - 0.05).abs() < 1e-3);
        for lp in m.loops() {
            for &i in &lp.vertices {
                assert_eq!(m.vertex(i), b.vertex(i));
            }
        }
    }
}
