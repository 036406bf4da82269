//! Planar (and one-dimensional) domains on which graphs are solved.
//!
//! A region is an outer boundary with optional holes. Each boundary component
//! carries a plate tag so that boundary conditions can be attached per plate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closest point on a region boundary together with the local geometry there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: Vec<f64>,
    /// Unit normal pointing into the region.
    pub inward_normal: Vec<f64>,
    /// Curvature of the boundary component with respect to the inward normal
    /// (positive where the region is locally convex).
    pub curvature: f64,
    pub component: usize,
    pub plate: u8,
}

/// Closed planar curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape2 {
    Circle { center: [f64; 2], radius: f64 },
    /// Counterclockwise closed polygon (first vertex not repeated).
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Result of a closest-point query on a single closed curve.
#[derive(Debug, Clone, Copy)]
struct CurveFoot {
    point: [f64; 2],
    /// Unit normal pointing out of the enclosed area.
    outward: [f64; 2],
    /// Signed curvature, positive for a counterclockwise convex curve.
    curvature: f64,
    distance: f64,
}

impl Shape2 {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Shape2::Circle { center, radius }
    }

    /// Ellipse sampled as a polygon with `n` vertices starting on the major axis.
    pub fn ellipse(center: [f64; 2], a: f64, b: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                [center[0] + a * t.cos(), center[1] + b * t.sin()]
            })
            .collect();
        Shape2::Polygon { vertices }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape2::Circle { radius, .. } if !(*radius > 0.0) => {
                Err(Error::invalid(format!("circle radius must be positive, got {radius}")))
            }
            Shape2::Polygon { vertices } if vertices.len() < 3 => {
                Err(Error::invalid("polygon needs at least three vertices"))
            }
            Shape2::Polygon { vertices } if signed_area(vertices) <= 0.0 => {
                Err(Error::invalid("polygon must be counterclockwise"))
            }
            _ => Ok(()),
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Shape2::Circle { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape2::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for d in 0..2 {
                        lo[d] = lo[d].min(v[d]);
                        hi[d] = hi[d].max(v[d]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Signed distance, negative inside.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Shape2::Circle { center, radius } => {
                ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius
            }
            Shape2::Polygon { vertices } => {
                let d = self.foot(p).distance;
                if point_in_polygon(vertices, p) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    fn foot(&self, p: [f64; 2]) -> CurveFoot {
        match self {
            Shape2::Circle { center, radius } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let r = (dx * dx + dy * dy).sqrt();
                let dir = if r > 0.0 { [dx / r, dy / r] } else { [1.0, 0.0] };
                CurveFoot {
                    point: [center[0] + radius * dir[0], center[1] + radius * dir[1]],
                    outward: dir,
                    curvature: 1.0 / radius,
                    distance: (r - radius).abs(),
                }
            }
            Shape2::Polygon { vertices } => polygon_foot(vertices, p),
        }
    }

    /// Reflect the curve across the line through `point` with unit `normal`,
    /// keeping counterclockwise orientation.
    pub fn reflected(&self, point: [f64; 2], normal: [f64; 2]) -> Shape2 {
        let refl = |q: [f64; 2]| {
            let s = (q[0] - point[0]) * normal[0] + (q[1] - point[1]) * normal[1];
            [q[0] - 2.0 * s * normal[0], q[1] - 2.0 * s * normal[1]]
        };
        match self {
            Shape2::Circle { center, radius } => Shape2::Circle { center: refl(*center), radius: *radius },
            Shape2::Polygon { vertices } => {
                let mut v: Vec<_> = vertices.iter().map(|q| refl(*q)).collect();
                v.reverse();
                Shape2::Polygon { vertices: v }
            }
        }
    }

    /// Area centroid.
    pub fn centroid(&self) -> [f64; 2] {
        match self {
            Shape2::Circle { center, .. } => *center,
            Shape2::Polygon { vertices: v } => {
                let n = v.len();
                let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let (p, q) = (v[i], v[(i + 1) % n]);
                    let c = p[0] * q[1] - q[0] * p[1];
                    a += c;
                    cx += (p[0] + q[0]) * c;
                    cy += (p[1] + q[1]) * c;
                }
                [cx / (3.0 * a), cy / (3.0 * a)]
            }
        }
    }

    /// Last crossing of the ray from `origin` at `angle` with the curve.
    ///
    /// For curves star-shaped about `origin` this is the unique crossing.
    pub fn ray_exit(&self, origin: [f64; 2], angle: f64) -> Option<[f64; 2]> {
        let d = [angle.cos(), angle.sin()];
        match self {
            Shape2::Circle { center, radius } => {
                let o = [origin[0] - center[0], origin[1] - center[1]];
                let b = o[0] * d[0] + o[1] * d[1];
                let c = o[0] * o[0] + o[1] * o[1] - radius * radius;
                let disc = b * b - c;
                (disc >= 0.0).then(|| {
                    let s = -b + disc.sqrt();
                    [origin[0] + s * d[0], origin[1] + s * d[1]]
                })
            }
            Shape2::Polygon { vertices: v } => {
                let n = v.len();
                let mut best: Option<f64> = None;
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let den = d[0] * e[1] - d[1] * e[0];
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let w = [a[0] - origin[0], a[1] - origin[1]];
                    let s = (w[0] * e[1] - w[1] * e[0]) / den;
                    let u = (w[0] * d[1] - w[1] * d[0]) / den;
                    if s >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
                        best = Some(best.map_or(s, |bs: f64| bs.max(s)));
                    }
                }
                best.map(|s| [origin[0] + s * d[0], origin[1] + s * d[1]])
            }
        }
    }

    /// Sample the curve as `n` points (polygons return their own vertices).
    pub fn sample(&self, n: usize) -> Vec<[f64; 2]> {
        match self {
            Shape2::Circle { center, radius } => (0..n)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / n as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
            Shape2::Polygon { vertices } => vertices.clone(),
        }
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n).map(|i| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        a[0] * b[1] - a[1] * b[0]
    })
    .sum::<f64>()
        * 0.5
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Circumscribed-circle curvature through three points, signed positive for a
/// left turn.
pub fn menger_curvature(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let bc = [c[0] - b[0], c[1] - b[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let cross = ab[0] * bc[1] - ab[1] * bc[0];
    let la = (ab[0] * ab[0] + ab[1] * ab[1]).sqrt();
    let lb = (bc[0] * bc[0] + bc[1] * bc[1]).sqrt();
    let lc = (ac[0] * ac[0] + ac[1] * ac[1]).sqrt();
    2.0 * cross / (la * lb * lc)
}

fn polygon_foot(v: &[[f64; 2]], p: [f64; 2]) -> CurveFoot {
    let n = v.len();
    let edge_normal = |i: usize| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l = (dx * dx + dy * dy).sqrt();
        [dy / l, -dx / l]
    };
    let vertex_normal = |i: usize| {
        let e0 = edge_normal((i + n - 1) % n);
        let e1 = edge_normal(i);
        let s = [e0[0] + e1[0], e0[1] + e1[1]];
        let l = (s[0] * s[0] + s[1] * s[1]).sqrt();
        [s[0] / l, s[1] / l]
    };
    let vertex_curvature = |i: usize| menger_curvature(v[(i + n - 1) % n], v[i], v[(i + 1) % n]);

    let mut best = (f64::INFINITY, 0usize, 0.0f64, [0.0; 2]);
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l2 = dx * dx + dy * dy;
        let s = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0);
        let q = [a[0] + s * dx, a[1] + s * dy];
        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
        if d2 < best.0 {
            best = (d2, i, s, q);
        }
    }
    let (d2, i, s, q) = best;
    // Blend vertex normals and curvatures along the edge so that the normal
    // field is continuous around the polygon.
    let (n0, n1) = (vertex_normal(i), vertex_normal((i + 1) % n));
    let blend = [(1.0 - s) * n0[0] + s * n1[0], (1.0 - s) * n0[1] + s * n1[1]];
    let l = (blend[0] * blend[0] + blend[1] * blend[1]).sqrt();
    CurveFoot {
        point: q,
        outward: [blend[0] / l, blend[1] / l],
        curvature: (1.0 - s) * vertex_curvature(i) + s * vertex_curvature((i + 1) % n),
        distance: d2.sqrt(),
    }
}

/// Domain of a nonparametric graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// One-dimensional interval `[lo, hi]`; endpoints tagged with plate 1.
    Interval { lo: f64, hi: f64 },
    /// Planar region: `outer` minus the interiors of `holes`.
    Planar {
        outer: Shape2,
        #[serde(default = "default_outer_plate")]
        outer_plate: u8,
        #[serde(default)]
        holes: Vec<(Shape2, u8)>,
    },
}

fn default_outer_plate() -> u8 {
    1
}

impl Region {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Region::Planar { outer: Shape2::circle(center, radius), outer_plate: 1, holes: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Planar { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Interval { lo, hi } if !(lo < hi) => Err(Error::invalid("interval must satisfy lo < hi")),
            Region::Interval { .. } => Ok(()),
            Region::Planar { outer, holes, .. } => {
                outer.validate()?;
                for (h, _) in holes {
                    h.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Interval { lo, hi } => (vec![*lo], vec![*hi]),
            Region::Planar { outer, .. } => {
                let (lo, hi) = outer.bbox();
                (lo.to_vec(), hi.to_vec())
            }
        }
    }

    /// Signed distance to the region boundary, negative inside.
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        match self {
            Region::Interval { lo, hi } => (lo - p[0]).max(p[0] - hi),
            Region::Planar { outer, holes, .. } => {
                let q = [p[0], p[1]];
                holes.iter().fold(outer.signed_distance(q), |acc, (h, _)| acc.max(-h.signed_distance(q)))
            }
        }
    }

    /// Nearest boundary point with inward normal and boundary curvature.
    pub fn closest_boundary_point(&self, p: &[f64]) -> BoundaryPoint {
        match self {
            Region::Interval { lo, hi } => {
                if (p[0] - lo).abs() <= (hi - p[0]).abs() {
                    BoundaryPoint { point: vec![*lo], inward_normal: vec![1.0], curvature: 0.0, component: 0, plate: 1 }
                } else {
                    BoundaryPoint { point: vec![*hi], inward_normal: vec![-1.0], curvature: 0.0, component: 1, plate: 1 }
                }
            }
            Region::Planar { outer, outer_plate, holes } => {
                let q = [p[0], p[1]];
                let f = outer.foot(q);
                let mut best = BoundaryPoint {
                    point: f.point.to_vec(),
                    inward_normal: vec![-f.outward[0], -f.outward[1]],
                    curvature: f.curvature,
                    component: 0,
                    plate: *outer_plate,
                };
                let mut best_d = f.distance;
                for (k, (h, plate)) in holes.iter().enumerate() {
                    let f = h.foot(q);
                    if f.distance < best_d {
                        best_d = f.distance;
                        // The region lies outside the hole: its inward normal is
                        // the hole's outward normal and convexity flips sign.
                        best = BoundaryPoint {
                            point: f.point.to_vec(),
                            inward_normal: f.outward.to_vec(),
                            curvature: -f.curvature,
                            component: k + 1,
                            plate: *plate,
                        };
                    }
                }
                best
            }
        }
    }

    pub fn reflected(&self, point: [f64; 2], normal: [f64; 2]) -> Region {
        match self {
            Region::Interval { .. } => self.clone(),
            Region::Planar { outer, outer_plate, holes } => Region::Planar {
                outer: outer.reflected(point, normal),
                outer_plate: *outer_plate,
                holes: holes.iter().map(|(h, t)| (h.reflected(point, normal), *t)).collect(),
            },
        }
    }
}
