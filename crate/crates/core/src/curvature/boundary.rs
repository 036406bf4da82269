use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::region::{menger_curvature, Shape2};

/// Line `alpha` in a plate: `point + s direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisLine {
    pub point: [f64; 2],
    pub direction: [f64; 2],
}

impl AxisLine {
    pub fn new(point: [f64; 2], direction: [f64; 2]) -> Result<Self> {
        let l = direction[0].hypot(direction[1]);
        if !(l > 0.0) {
            return Err(Error::invalid("axis direction must be nonzero"));
        }
        Ok(Self { point, direction: [direction[0] / l, direction[1] / l] })
    }

    /// Unit normal, the direction rotated a quarter turn counterclockwise.
    pub fn normal(&self) -> [f64; 2] {
        [-self.direction[1], self.direction[0]]
    }

    pub fn reflect(&self, q: [f64; 2]) -> [f64; 2] {
        let n = self.normal();
        let s = (q[0] - self.point[0]) * n[0] + (q[1] - self.point[1]) * n[1];
        [q[0] - 2.0 * s * n[0], q[1] - 2.0 * s * n[1]]
    }

    pub fn distance(&self, q: [f64; 2]) -> f64 {
        let n = self.normal();
        ((q[0] - self.point[0]) * n[0] + (q[1] - self.point[1]) * n[1]).abs()
    }
}

/// Boundary `∂D_i` of a plate region: a closed counterclockwise polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub plate: u8,
    pub vertices: Vec<[f64; 2]>,
    /// Mirror line when built from graphs over it.
    #[serde(default)]
    pub axis: Option<AxisLine>,
    /// Exact shape when the polyline samples a known curve.
    #[serde(default)]
    pub exact: Option<Shape2>,
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

impl BoundaryCurve {
    pub fn polyline(plate: u8, vertices: Vec<[f64; 2]>) -> Result<Self> {
        let c = Self { plate, vertices, axis: None, exact: None };
        c.validate()?;
        Ok(c)
    }

    /// Circle sampled at `n` points starting at angle 0.
    pub fn circle(plate: u8, center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        let shape = Shape2::circle(center, radius);
        shape.validate()?;
        let c = Self { plate, vertices: shape.sample(n), axis: None, exact: Some(shape) };
        c.validate()?;
        Ok(c)
    }

    /// Curve made of the graph of `f >= 0` over `alpha` and its mirror image.
    ///
    /// `samples` are `(s, f(s))` with strictly increasing `s`, `f` zero at
    /// both ends and positive between. The lower half is built by negating
    /// `f`, so the polyline is invariant under reflection across `alpha`.
    pub fn symmetric_graph(plate: u8, alpha: AxisLine, samples: &[(f64, f64)]) -> Result<Self> {
        let k = samples.len();
        if k < 5 {
            return Err(Error::invalid("symmetric graph needs at least five samples"));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("graph abscissae must be strictly increasing"));
        }
        if samples[0].1 != 0.0 || samples[k - 1].1 != 0.0 {
            return Err(Error::invalid("graph must vanish at both ends"));
        }
        if let Some(s) = samples[1..k - 1].iter().find(|s| !(s.1 > 0.0)) {
            return Err(Error::invalid(format!("graph must be positive inside, got f({}) = {}", s.0, s.1)));
        }
        let (d, n) = (alpha.direction, alpha.normal());
        let at = |s: f64, f: f64| [alpha.point[0] + s * d[0] + f * n[0], alpha.point[1] + s * d[1] + f * n[1]];
        // Counterclockwise: along the lower graph, then back along the upper.
        let mut vertices: Vec<[f64; 2]> = samples.iter().map(|&(s, f)| at(s, -f)).collect();
        vertices.extend(samples[1..k - 1].iter().rev().map(|&(s, f)| at(s, f)));
        let c = Self { plate, vertices, axis: Some(alpha), exact: None };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.plate != 1 && self.plate != 2 {
            return Err(Error::invalid(format!("plate id must be 1 or 2, got {}", self.plate)));
        }
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return Err(Error::invalid("boundary curve needs at least three vertices"));
        }
        let shape = Shape2::Polygon { vertices: v.clone() };
        shape.validate()?;
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(Error::invalid(format!("boundary curve self-intersects at edges {i} and {j}")));
                }
            }
        }
        Ok(())
    }

    /// Shape used to build grid regions: the exact curve when known.
    pub fn shape(&self) -> Shape2 {
        self.exact.clone().unwrap_or_else(|| Shape2::Polygon { vertices: self.vertices.clone() })
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = Shape2::Polygon { vertices: self.vertices.clone() }.bbox();
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Largest distance between a vertex and the mirror image of the curve's
    /// vertex set across `axis`.
    pub fn symmetry_defect(&self, axis: &AxisLine) -> f64 {
        self.vertices
            .iter()
            .map(|&p| {
                let q = axis.reflect(p);
                self.vertices.iter().map(|w| (w[0] - q[0]).hypot(w[1] - q[1])).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Read `x,y` rows (optional header) with metadata `{"plate": .., "axis": ..}`.
    pub fn from_csv(csv: &Path, meta: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(csv).map_err(|e| Error::Io { path: csv.to_path_buf(), source: e })?;
        let mut vertices = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
            match parsed {
                Some(xy) if xy.len() == 2 => vertices.push([xy[0], xy[1]]),
                _ if ln == 0 => continue,
                _ => {
                    return Err(Error::Parse {
                        context: format!("{}:{}", csv.display(), ln + 1),
                        message: format!("expected two numbers, got {line:?}"),
                    })
                }
            }
        }
        #[derive(Deserialize)]
        struct Meta {
            plate: u8,
            #[serde(default)]
            axis: Option<AxisLine>,
        }
        let meta = match meta {
            Some(p) => {
                let t = std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })?;
                serde_json::from_str(&t)?
            }
            None => Meta { plate: 1, axis: None },
        };
        let c = Self { plate: meta.plate, vertices, axis: meta.axis, exact: None };
        c.validate()?;
        Ok(c)
    }
}

/// Curvature of the curve at each vertex with respect to the inward normal
/// (positive on convex parts), from circles through consecutive triples.
pub fn boundary_mean_curvature(curve: &BoundaryCurve) -> Result<Vec<f64>> {
    let v = &curve.vertices;
    let n = v.len();
    if n < 8 {
        return Err(Error::DegenerateCurve(format!("need at least 8 vertices, got {n}")));
    }
    let min_len = 1e-12 * curve.diameter();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (b[0] - a[0]).hypot(b[1] - a[1]) < min_len {
            return Err(Error::DegenerateCurve(format!("vertices {i} and {} coincide", (i + 1) % n)));
        }
    }
    Ok((0..n).map(|i| menger_curvature(v[(i + n - 1) % n], v[i], v[(i + 1) % n])).collect())
}
