//! Bounding-volume hierarchy over triangles: nearest-point and ray queries.

use super::Vec3;

/// Which part of a triangle the closest point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Face,
    /// Edge from corner `i` to corner `(i + 1) % 3`.
    Edge(u8),
    Vertex(u8),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub triangle: usize,
    pub point: Vec3,
    pub distance: f64,
    pub feature: Feature,
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn of(t: &[Vec3; 3]) -> Self {
        Self { lo: t[0].inf(&t[1]).inf(&t[2]), hi: t[0].sup(&t[1]).sup(&t[2]) }
    }

    fn merge(&self, o: &Aabb) -> Aabb {
        Aabb { lo: self.lo.inf(&o.lo), hi: self.hi.sup(&o.hi) }
    }

    fn dist2(&self, p: &Vec3) -> f64 {
        let d = (self.lo - p).sup(&Vec3::zeros()).sup(&(p - self.hi));
        d.norm_squared()
    }

    fn hit_by_ray(&self, o: &Vec3, inv: &Vec3) -> bool {
        let mut tmin: f64 = 0.0;
        let mut tmax = f64::INFINITY;
        for a in 0..3 {
            let t1 = (self.lo[a] - o[a]) * inv[a];
            let t2 = (self.hi[a] - o[a]) * inv[a];
            let (near, far) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            // NaN from 0 * inf means the ray is parallel and inside the slab.
            if !near.is_nan() {
                tmin = tmin.max(near);
            }
            if !far.is_nan() {
                tmax = tmax.min(far);
            }
        }
        tmin <= tmax * (1.0 + 1e-12) + 1e-300
    }
}

enum Node {
    Leaf { bbox: Aabb, items: Vec<usize> },
    Inner { bbox: Aabb, left: Box<Node>, right: Box<Node> },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
        }
    }
}

const LEAF: usize = 8;

pub struct Bvh {
    triangles: Vec<[Vec3; 3]>,
    root: Node,
}

impl std::fmt::Debug for Bvh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Bvh").field("triangles", &self.triangles.len()).finish()
    }
}

impl Bvh {
    pub fn new(triangles: Vec<[Vec3; 3]>) -> Self {
        assert!(!triangles.is_empty(), "BVH needs at least one triangle");
        let boxes: Vec<Aabb> = triangles.iter().map(Aabb::of).collect();
        let centers: Vec<Vec3> = triangles.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let items: Vec<usize> = (0..triangles.len()).collect();
        let root = build(items, &boxes, &centers);
        Self { triangles, root }
    }

    pub fn triangles(&self) -> &[[Vec3; 3]] {
        &self.triangles
    }

    /// Closest point on any triangle; ties go to the lowest triangle index.
    pub fn nearest(&self, p: &Vec3) -> Nearest {
        let mut best = Nearest { triangle: usize::MAX, point: *p, distance: f64::INFINITY, feature: Feature::Face };
        let mut best2 = f64::INFINITY;
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            if node.bbox().dist2(p) > best2 {
                continue;
            }
            match node {
                Node::Leaf { items, .. } => {
                    for &i in items {
                        let (q, feature) = closest_on_triangle(p, &self.triangles[i]);
                        let d2 = (q - p).norm_squared();
                        if d2 < best2 || (d2 == best2 && i < best.triangle) {
                            best2 = d2;
                            best = Nearest { triangle: i, point: q, distance: d2.sqrt(), feature };
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let (dl, dr) = (left.bbox().dist2(p), right.bbox().dist2(p));
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// All intersections of the ray `o + s d`, `s > 0`, as `(s, triangle)`
    /// sorted by `s`.
    pub fn ray_hits(&self, o: &Vec3, d: &Vec3) -> Vec<(f64, usize)> {
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut hits = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            if !node.bbox().hit_by_ray(o, &inv) {
                continue;
            }
            match node {
                Node::Leaf { items, .. } => {
                    for &i in items {
                        if let Some(s) = ray_triangle(o, d, &self.triangles[i]) {
                            hits.push((s, i));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits
    }
}

fn build(mut items: Vec<usize>, boxes: &[Aabb], centers: &[Vec3]) -> Node {
    let bbox = items.iter().skip(1).fold(boxes[items[0]], |acc, &i| acc.merge(&boxes[i]));
    if items.len() <= LEAF {
        return Node::Leaf { bbox, items };
    }
    let (clo, chi) = items.iter().fold((Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)), |(lo, hi), &i| {
        (lo.inf(&centers[i]), hi.sup(&centers[i]))
    });
    let ext = chi - clo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    items.sort_by(|&a, &b| centers[a][axis].total_cmp(&centers[b][axis]).then(a.cmp(&b)));
    let right = items.split_off(items.len() / 2);
    Node::Inner {
        bbox,
        left: Box::new(build(items, boxes, centers)),
        right: Box::new(build(right, boxes, centers)),
    }
}

/// Closest point on a triangle (Voronoi-region walk).
pub fn closest_on_triangle(p: &Vec3, t: &[Vec3; 3]) -> (Vec3, Feature) {
    let [a, b, c] = *t;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, Feature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

/// Möller–Trumbore; returns the ray parameter of a strictly positive hit.
pub fn ray_triangle(o: &Vec3, d: &Vec3, t: &[Vec3; 3]) -> Option<f64> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tv = o - t[0];
    let u = tv.dot(&pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = tv.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let s = e2.dot(&qv) * inv;
    (s > 0.0).then_some(s)
}
