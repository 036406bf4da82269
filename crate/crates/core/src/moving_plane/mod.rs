//! Moving-plane reflection on meshes.
//!
//! A plane `x . e = s_max - t` enters the body from the side where `x . e` is
//! largest. The part of the mesh beyond it (the cap) is reflected back, and
//! the sweep stops at the first `t` where the reflected cap touches the mesh
//! from inside or leaves the body. The plane at that moment is the candidate
//! symmetry plane.

mod body;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::bvh::Bvh;
use crate::geometry::{Plane, Slab, SurfaceMesh, Vec3};
use body::{Body, Probe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchClass {
    /// Contact away from the plates.
    Interior,
    /// Contact on a plate.
    Boundary,
    /// The reflected cap meets the mesh along a spread-out set at once, as
    /// it does for a mirror-symmetric mesh.
    DegenerateSimultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub t: f64,
    /// Smallest signed clearance of the reflected cap; `None` while every
    /// cap vertex is within the margin of the plane.
    pub min_clearance: Option<f64>,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub direction: Vec3,
    pub t_star: f64,
    pub touch_class: TouchClass,
    pub touch_points: Vec<Vec3>,
    pub symmetry_plane: Plane,
    pub deviation: f64,
    pub profile: Vec<ProfileSample>,
}

impl SweepResult {
    pub fn profile_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let mut out = String::from("t,min_clearance,deviation\n");
        for p in &self.profile {
            out.push_str(&format!("{:.17e},{},{}\n", p.t, opt(p.min_clearance), opt(p.deviation)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    /// Coarse steps across the extent before bisection.
    pub march_steps: usize,
    /// Clearance below which the reflected cap counts as touching; defaults
    /// to `2 mesh_h²`.
    pub contact_tol: Option<f64>,
    /// Minimum dot product of the reflected and foot normals at a contact.
    pub normal_agreement: f64,
    /// Cap vertices closer than this many `mesh_h` to the plane are skipped.
    pub margin: f64,
    /// Bisection stops at this fraction of the extent.
    pub bisection_tol: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { march_steps: 32, contact_tol: None, normal_agreement: 0.9, margin: 2.0, bisection_tol: 1e-8 }
    }
}

impl SweepSettings {
    pub fn validate(&self) -> Result<()> {
        if self.march_steps < 2 {
            return Err(Error::invalid("march_steps must be at least 2"));
        }
        if !(self.bisection_tol > 0.0 && self.margin >= 0.0) {
            return Err(Error::invalid("bisection_tol must be positive and margin nonnegative"));
        }
        if matches!(self.contact_tol, Some(t) if !(t > 0.0)) {
            return Err(Error::invalid("contact_tol must be positive"));
        }
        Ok(())
    }
}

fn check_direction(mesh: &SurfaceMesh, direction: &Vec3) -> Result<Vec3> {
    let axis = mesh.slab().axis3()?;
    let n = direction.norm();
    if !(n > 0.0) {
        return Err(Error::invalid("sweep direction is zero"));
    }
    let e = direction / n;
    let tilt = e.dot(&axis);
    if tilt.abs() > 1e-9 {
        return Err(Error::Orientation(tilt));
    }
    Ok(e)
}

/// Reflect the part of `mesh` on the side `plane.normal` points to and
/// return the largest distance from a reflected vertex to the rest of the
/// mesh. Reflected vertices whose nearest point lies in the strip next to
/// the cut are skipped: they have no counterpart on the remaining surface.
pub fn reflect_and_compare(mesh: &SurfaceMesh, plane: &Plane) -> Result<f64> {
    let axis = mesh.slab().axis3()?;
    let tilt = plane.normal.dot(&axis);
    if tilt.abs() > 1e-9 {
        return Err(Error::Orientation(tilt));
    }
    let side: Vec<f64> = mesh.vertices().iter().map(|v| plane.signed_distance(v)).collect();
    let cap: Vec<usize> = (0..side.len()).filter(|&v| side[v] > 0.0).collect();
    let rest: Vec<[Vec3; 3]> = mesh
        .faces()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.iter().all(|&v| side[v] <= 0.0))
        .map(|(i, _)| mesh.triangle(i))
        .collect();
    if cap.is_empty() || rest.is_empty() {
        return Err(Error::EmptyCap);
    }
    let strip = 1.5 * mesh.max_edge();
    let bvh = Bvh::new(rest);
    let dists: Vec<Option<f64>> = cap
        .par_iter()
        .map(|&v| {
            let p = crate::geometry::reflect(&mesh.vertex(v), plane);
            let near = bvh.nearest(&p);
            (plane.signed_distance(&near.point) < -strip).then_some(near.distance)
        })
        .collect();
    let kept: Vec<f64> = dists.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::EmptyCap);
    }
    Ok(kept.into_iter().fold(0.0, f64::max))
}

/// Largest distance from a reflected vertex to the mesh.
fn whole_mirror_misfit(body: &Body, plane: &Plane) -> f64 {
    let dists: Vec<f64> = (0..body.mesh.vertices().len())
        .into_par_iter()
        .map(|v| body.nearest(&crate::geometry::reflect(&body.mesh.vertex(v), plane)).distance)
        .collect();
    dists.into_iter().fold(0.0, f64::max)
}

struct Sweep<'a> {
    body: Body<'a>,
    e: Vec3,
    along: Vec<f64>,
    s_max: f64,
    extent: f64,
    tol: f64,
    margin: f64,
    agreement: f64,
}

struct Eval {
    probes: Vec<Probe>,
    violated: bool,
}

impl<'a> Sweep<'a> {
    fn new(mesh: &'a SurfaceMesh, e: Vec3, settings: &SweepSettings) -> Result<Self> {
        let body = Body::new(mesh)?;
        let along: Vec<f64> = mesh.vertices().iter().map(|v| v.dot(&e)).collect();
        let s_max = along.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s_min = along.iter().copied().fold(f64::INFINITY, f64::min);
        let h = body.h;
        Ok(Self {
            e,
            s_max,
            extent: s_max - s_min,
            tol: settings.contact_tol.unwrap_or(2.0 * h * h),
            margin: settings.margin * h,
            agreement: settings.normal_agreement,
            along,
            body,
        })
    }

    fn offset(&self, t: f64) -> f64 {
        self.s_max - t
    }

    fn contact(&self, p: &Probe) -> bool {
        p.clearance < -self.tol || (p.clearance <= self.tol && p.agrees)
    }

    fn eval(&self, t: f64) -> Eval {
        let lambda = self.offset(t);
        let cap: Vec<usize> = (0..self.along.len()).filter(|&v| self.along[v] > lambda + self.margin).collect();
        let probes = self.body.probes(&cap, &self.e, lambda, self.agreement);
        let violated = probes.iter().any(|p| self.contact(p));
        Eval { probes, violated }
    }

    fn plane(&self, lambda: f64) -> Plane {
        Plane { point: self.e * lambda, normal: self.e }
    }

    fn off_plate(&self, p: &Vec3) -> bool {
        let h = self.body.h;
        let slab = self.body.mesh.slab();
        let z = slab.height(p);
        z - slab.offset_lo > 3.0 * h && slab.offset_hi - z > 3.0 * h
    }

    /// A touch is simultaneous when near-contacts (within four contact
    /// tolerances) spread over a non-collinear set away from the plates and
    /// some nearby plane mirrors the mesh to within five contact tolerances.
    /// Returns that plane's offset.
    fn simultaneous(&self, mesh: &SurfaceMesh, probes: &[Probe], lambda: f64) -> Result<Option<(f64, Vec<Vec3>)>> {
        let loose: Vec<Vec3> = probes
            .iter()
            .filter(|p| p.clearance <= 4.0 * self.tol && (p.agrees || p.clearance < -self.tol))
            .map(|p| p.point)
            .filter(|p| self.off_plate(p))
            .collect();
        if !non_collinear(&loose, 4.0 * self.body.h) {
            return Ok(None);
        }
        let refined = self.refine_plane(lambda);
        match reflect_and_compare(mesh, &self.plane(refined)) {
            Ok(d) if d <= 5.0 * self.tol => {
                let stride = (loose.len() / 64).max(1);
                Ok(Some((refined, loose.into_iter().step_by(stride).collect())))
            }
            Ok(_) | Err(Error::EmptyCap) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn classify(&self, contacts: &[Probe]) -> (TouchClass, Vec<Vec3>) {
        let h = self.body.h;
        let slab = self.body.mesh.slab();
        let deepest = contacts.iter().min_by(|a, b| a.clearance.total_cmp(&b.clearance).then(a.vertex.cmp(&b.vertex)));
        match deepest {
            Some(c) => {
                let z = slab.height(&c.point);
                let on_plate = self.body.plates[c.vertex].is_some()
                    || (z - slab.offset_lo).abs() <= h
                    || (slab.offset_hi - z).abs() <= h;
                (if on_plate { TouchClass::Boundary } else { TouchClass::Interior }, vec![c.point])
            }
            None => (TouchClass::Interior, Vec::new()),
        }
    }

    /// Mean square distance between reflected vertices and the mesh, both
    /// sides reflected, skipping vertices near the plane and feet near it.
    fn mirror_misfit(&self, lambda: f64) -> f64 {
        let strip = 1.5 * self.body.mesh.max_edge();
        let plane = self.plane(lambda);
        let terms: Vec<Option<f64>> = (0..self.along.len())
            .into_par_iter()
            .map(|v| {
                if (self.along[v] - lambda).abs() <= self.margin {
                    return None;
                }
                let p = crate::geometry::reflect(&self.body.mesh.vertex(v), &plane);
                let near = self.body.nearest(&p);
                ((near.point.dot(&self.e) - lambda).abs() >= strip).then_some(near.distance * near.distance)
            })
            .collect();
        // Summed in index order so the result does not depend on scheduling.
        let sums = terms.iter().flatten().fold((0.0, 0usize), |a, d| (a.0 + d, a.1 + 1));
        if sums.1 == 0 {
            f64::INFINITY
        } else {
            sums.0 / sums.1 as f64
        }
    }

    fn refine_plane(&self, lambda: f64) -> f64 {
        let width = 4.0 * self.body.h.max(self.margin);
        golden_min(|l| self.mirror_misfit(l), lambda - width, lambda + width, self.extent * 1e-10)
    }
}

/// True when the points span a triangle whose sides and height all exceed
/// `min_sep`.
fn non_collinear(points: &[Vec3], min_sep: f64) -> bool {
    let Some(p0) = points.first() else { return false };
    let far = |from: &Vec3| {
        points.iter().max_by(|a, b| (*a - from).norm().total_cmp(&(*b - from).norm())).copied().unwrap_or(*from)
    };
    let p1 = far(p0);
    let p2 = far(&p1);
    let base = p2 - p1;
    if base.norm() <= min_sep {
        return false;
    }
    let u = base.normalize();
    points.iter().any(|q| {
        let r = q - p1;
        (r - u * r.dot(&u)).norm() > min_sep
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn run(mesh: &SurfaceMesh, direction: &Vec3, settings: &SweepSettings, profile: bool) -> Result<SweepResult> {
    settings.validate()?;
    let e = check_direction(mesh, direction)?;
    let sw = Sweep::new(mesh, e, settings)?;
    let steps = settings.march_steps;
    let mut samples = Vec::new();
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=steps {
        let t = sw.extent * k as f64 / steps as f64;
        let ev = sw.eval(t);
        if profile {
            let min_clearance = ev.probes.iter().map(|p| p.clearance).reduce(f64::min);
            let deviation = reflect_and_compare(mesh, &sw.plane(sw.offset(t))).ok();
            samples.push(ProfileSample { t, min_clearance, deviation });
        }
        if ev.violated {
            hi = Some((t, ev));
            break;
        }
        lo = t;
    }
    let (mut t_hi, mut last) = match hi {
        Some(v) => v,
        None => {
            let ev = sw.eval(lo);
            (lo, ev)
        }
    };
    while t_hi - lo > sw.extent * settings.bisection_tol {
        let mid = 0.5 * (lo + t_hi);
        let ev = sw.eval(mid);
        if ev.violated {
            t_hi = mid;
            last = ev;
        } else {
            lo = mid;
        }
    }
    let (touch_class, touch_points, lambda) = match sw.simultaneous(mesh, &last.probes, sw.offset(lo))? {
        Some((lambda, points)) => (TouchClass::DegenerateSimultaneous, points, lambda),
        None => {
            let contacts: Vec<Probe> = last.probes.iter().filter(|p| sw.contact(p)).copied().collect();
            let (class, points) = sw.classify(&contacts);
            (class, points, sw.offset(lo))
        }
    };
    let plane = sw.plane(lambda);
    // A touch right at the start leaves a cap too thin to compare; the
    // whole reflected mesh then measures the asymmetry instead.
    let deviation = match reflect_and_compare(mesh, &plane) {
        Err(Error::EmptyCap) => whole_mirror_misfit(&sw.body, &plane),
        other => other?,
    };
    Ok(SweepResult {
        direction: e,
        t_star: sw.s_max - lambda,
        touch_class,
        touch_points,
        symmetry_plane: plane,
        deviation,
        profile: samples,
    })
}

/// Sweep along `direction` to the first touching configuration.
pub fn first_touch(mesh: &SurfaceMesh, direction: &Vec3, settings: &SweepSettings) -> Result<SweepResult> {
    run(mesh, direction, settings, false)
}

/// [`first_touch`] plus the sampled clearance and deviation along the way.
pub fn sweep_direction(mesh: &SurfaceMesh, direction: &Vec3, settings: &SweepSettings) -> Result<SweepResult> {
    run(mesh, direction, settings, true)
}

/// `count` directions parallel to the plates at angles `start + 2πk/count`
/// in the plate basis, each shifted by up to `jitter` times half the spacing.
pub fn sweep_directions(slab: &Slab, count: usize, start: f64, jitter: f64, seed: u64) -> Result<Vec<Vec3>> {
    if count == 0 {
        return Err(Error::invalid("need at least one sweep direction"));
    }
    let (e1, e2) = slab.plate_basis()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spacing = TAU / count as f64;
    Ok((0..count)
        .map(|k| {
            let shift = if jitter > 0.0 { jitter * 0.5 * spacing * rng.gen_range(-1.0..1.0) } else { 0.0 };
            let th = start + spacing * k as f64 + shift;
            e1 * th.cos() + e2 * th.sin()
        })
        .collect())
}

/// Sweeps over all directions, in parallel, returned in input order.
pub fn sweep_all(mesh: &SurfaceMesh, directions: &[Vec3], settings: &SweepSettings) -> Result<Vec<SweepResult>> {
    directions.par_iter().map(|d| sweep_direction(mesh, d, settings)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Where the axis meets plate 1.
    pub point: Vec3,
    pub direction: Vec3,
    /// Largest distance from the axis to a symmetric plane.
    pub residual: f64,
}

impl Axis {
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        let r = p - self.point;
        (r - self.direction * r.dot(&self.direction)).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Symmetric,
    Asymmetric { witness: usize, direction: Vec3, deviation: f64 },
    /// Every plane is symmetric but they do not pin down an axis.
    Undetermined { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTolerances {
    /// Deviation at or below which a plane counts as a symmetry plane.
    pub deviation: f64,
    /// Largest admissible distance from the axis to a symmetry plane.
    pub axis_residual: f64,
}

impl SymmetryTolerances {
    /// `10 mesh_h²` for planes and `mesh_h` for the axis.
    pub fn for_mesh_h(h: f64) -> Self {
        Self { deviation: 10.0 * h * h, axis_residual: h }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub results: Vec<SweepResult>,
    pub axis: Option<Axis>,
    pub max_deviation: f64,
    pub verdict: Verdict,
    pub tolerances: SymmetryTolerances,
}

impl SymmetryReport {
    pub fn is_symmetric(&self) -> bool {
        self.verdict == Verdict::Symmetric
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Least-squares line orthogonal to the plates through the planes of
/// `planes`; `None` when their normals do not span the plate directions.
pub fn axis_from_planes(planes: &[Plane], slab: &Slab) -> Result<Option<Axis>> {
    let axis = slab.axis3()?;
    let (e1, e2) = slab.plate_basis()?;
    let mut m = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for p in planes {
        let n = [p.normal.dot(&e1), p.normal.dot(&e2)];
        let o = p.offset();
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += n[i] * n[j];
            }
            rhs[i] += n[i] * o;
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let trace = m[0][0] + m[1][1];
    if planes.len() < 2 || !(det > 1e-6 * trace * trace) {
        return Ok(None);
    }
    let c = [(rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det, (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det];
    let point = e1 * c[0] + e2 * c[1] + axis * slab.offset_lo;
    let residual = planes.iter().map(|p| p.signed_distance(&point).abs()).fold(0.0, f64::max);
    Ok(Some(Axis { point, direction: axis, residual }))
}

/// Collect sweep results into a report: the axis is fitted to the planes
/// whose deviation is within tolerance.
pub fn extract_symmetry_axis(
    results: Vec<SweepResult>,
    slab: &Slab,
    tol: SymmetryTolerances,
) -> Result<SymmetryReport> {
    let max_deviation = results.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let planes: Vec<Plane> =
        results.iter().filter(|r| r.deviation <= tol.deviation).map(|r| r.symmetry_plane).collect();
    let axis = axis_from_planes(&planes, slab)?.filter(|a| a.residual <= tol.axis_residual);
    let worst = results
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.deviation.total_cmp(&b.1.deviation).then(b.0.cmp(&a.0)))
        .filter(|(_, r)| r.deviation > tol.deviation);
    let verdict = match (worst, &axis) {
        (Some((i, r)), _) => Verdict::Asymmetric { witness: i, direction: r.direction, deviation: r.deviation },
        (None, Some(_)) => Verdict::Symmetric,
        (None, None) if results.is_empty() => Verdict::Undetermined { reason: "no sweeps".into() },
        (None, None) => Verdict::Undetermined {
            reason: "symmetry planes do not meet in a common line orthogonal to the plates".into(),
        },
    };
    Ok(SymmetryReport { results, axis, max_deviation, verdict, tolerances: tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn slab() -> Slab {
        Slab::horizontal(-1.0, 1.0).unwrap()
    }

    #[test]
    fn sphere_reflection_through_center_and_offset() {
        let c = Vec3::new(0.1, -0.2, 0.0);
        let m = shapes::uv_sphere(&slab(), c, 0.5, 64, 32).unwrap();
        let h = m.mesh_h();
        let through = Plane::new(c, Vec3::x()).unwrap();
        assert!(reflect_and_compare(&m, &through).unwrap() <= h * h);
        for shift in [0.1, -0.1] {
            let off = Plane::new(c + Vec3::x() * shift, Vec3::x()).unwrap();
            assert!(reflect_and_compare(&m, &off).unwrap() >= 0.05);
        }
    }

    #[test]
    fn tilted_plane_and_empty_cap() {
        let m = shapes::uv_sphere(&slab(), Vec3::zeros(), 0.5, 32, 16).unwrap();
        let tilted = Plane::new(Vec3::zeros(), Vec3::new(0.6, 0.0, 0.8)).unwrap();
        assert!(matches!(reflect_and_compare(&m, &tilted), Err(Error::Orientation(_))));
        let outside = Plane::new(Vec3::x() * 2.0, Vec3::x()).unwrap();
        assert!(matches!(reflect_and_compare(&m, &outside), Err(Error::EmptyCap)));
    }

    #[test]
    fn revolved_mesh_touches_degenerately_on_its_axis() {
        let s = Slab::horizontal(0.0, 1.0).unwrap();
        let rows: Vec<(f64, f64)> = (0..=16).map(|k| {
            let z = k as f64 / 16.0;
            (0.6 + 0.15 * (std::f64::consts::PI * z).sin(), z)
        }).collect();
        let a = 0.3;
        let m = shapes::revolve(&s, [a, 0.0], &rows, 64).unwrap();
        let r = sweep_direction(&m, &Vec3::x(), &SweepSettings::default()).unwrap();
        assert_eq!(r.touch_class, TouchClass::DegenerateSimultaneous);
        assert!((r.symmetry_plane.offset() - a).abs() < 1e-6, "{}", r.symmetry_plane.offset());
        let h = m.mesh_h();
        assert!(r.deviation <= h * h);
    }

    #[test]
    fn dent_stops_the_sweep_short_at_an_interior_point() {
        let s = slab();
        let c = Vec3::new(0.2, 0.1, 0.0);
        let sphere = shapes::uv_sphere(&s, c, 0.5, 96, 48).unwrap();
        // Dent on the far side, away from the equator of the sweep.
        let at = c + Vec3::new(-0.5 * 0.8, 0.0, 0.5 * 0.6);
        let m = shapes::bump(&sphere, at, -0.05, 0.12).unwrap();
        let r = first_touch(&m, &Vec3::x(), &SweepSettings::default()).unwrap();
        assert_eq!(r.touch_class, TouchClass::Interior);
        assert!(r.symmetry_plane.offset() > c.x + 1e-3, "plane at {}", r.symmetry_plane.offset());
        let centroid_plane = Plane::new(c, Vec3::x()).unwrap();
        assert!(reflect_and_compare(&m, &centroid_plane).unwrap() >= 0.02);
    }

    #[test]
    fn shifted_drum_touches_on_a_plate() {
        let s = Slab::horizontal(0.0, 1.0).unwrap();
        let m = shapes::sheared_drum(&s, 0.5, [0.15, 0.0], 0.05, 64, 16).unwrap();
        let r = first_touch(&m, &Vec3::x(), &SweepSettings::default()).unwrap();
        assert_eq!(r.touch_class, TouchClass::Boundary, "{r:?}");
        let z = r.touch_points[0].z;
        assert!(z.abs() < 0.1 || (1.0 - z).abs() < 0.1);
    }

    #[test]
    fn ellipsoid_axes_give_central_planes() {
        let c = Vec3::new(0.05, -0.1, 0.0);
        let m = shapes::ellipsoid(&slab(), c, [0.6, 0.4, 0.3], 64, 32).unwrap();
        let h = m.mesh_h();
        for d in [Vec3::x(), Vec3::y(), -Vec3::x()] {
            let r = sweep_direction(&m, &d, &SweepSettings::default()).unwrap();
            assert!(r.deviation <= 10.0 * h * h);
            assert!(r.symmetry_plane.signed_distance(&c).abs() < h);
            assert!(!r.profile.is_empty());
            assert!(r.profile_csv().starts_with("t,min_clearance,deviation\n"));
        }
    }

    #[test]
    fn axis_from_two_orthogonal_planes() {
        let s = slab();
        let planes = [Plane::new(Vec3::zeros(), Vec3::x()).unwrap(), Plane::new(Vec3::zeros(), Vec3::y()).unwrap()];
        let a = axis_from_planes(&planes, &s).unwrap().unwrap();
        assert!(a.point.x.abs() < 1e-15 && a.point.y.abs() < 1e-15);
        assert_eq!(a.direction, Vec3::z());
        assert!(a.residual < 1e-15);
    }

    #[test]
    fn noisy_planes_recover_the_axis() {
        let s = slab();
        let centre = Vec3::new(0.3, -0.7, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let planes: Vec<Plane> = (0..8)
            .map(|k| {
                let th = TAU * k as f64 / 8.0 + rng.gen_range(-1e-6..1e-6);
                let n = Vec3::new(th.cos(), th.sin(), 0.0);
                Plane::new(centre + n * rng.gen_range(-1e-6..1e-6), n).unwrap()
            })
            .collect();
        let a = axis_from_planes(&planes, &s).unwrap().unwrap();
        assert!(a.distance_to(&centre) < 1e-5);
    }

    #[test]
    fn parallel_planes_give_no_axis() {
        let s = slab();
        let planes = [Plane::new(Vec3::zeros(), Vec3::x()).unwrap(), Plane::new(Vec3::x(), Vec3::x()).unwrap()];
        assert!(axis_from_planes(&planes, &s).unwrap().is_none());
    }
}
