use std::sync::Arc;

use super::report::{
    Criterion, EllipticitySummary, Provenance, SolverDiagnostics, StageFailure, TouchingSpotCheck, VerificationReport,
};
use super::{Model, Scenario, ScenarioId};
use crate::error::{Error, Result};
use crate::geometry::{shapes, DomainGrid, Plane, Region, ScalarField, Shape2, SurfaceMesh, Vec3};
use crate::linearization::{assemble_difference_operator, verify_ellipticity_bound, DEFAULT_PANELS};
use crate::moving_plane::{
    extract_symmetry_axis, sweep_all, sweep_directions, SymmetryReport, SymmetryTolerances, Verdict,
};
use crate::solver::{
    region_from_curves, solve_axisymmetric_profile, solve_graph, BoundaryConditionSpec, GraphSolution, ProfileCurve,
};
use crate::touching::{check_interior_touching, Conclusion};

/// Everything a run produced, for reporting and export.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub seed: u64,
    pub report: VerificationReport,
    pub solution: Option<GraphSolution>,
    pub profile_curve: Option<ProfileCurve>,
    pub mesh: Option<SurfaceMesh>,
}

/// Solved surface before meshing.
#[derive(Debug, Clone)]
pub enum Solved {
    Graph(GraphSolution),
    Profile(ProfileCurve),
}

/// Run the full pipeline. Stage errors are recorded in the report rather
/// than returned, so a failing scenario still yields partial artifacts.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> ScenarioOutcome {
    let mut report = VerificationReport::empty(scenario.id.as_str(), Provenance::new(scenario, seed));
    let mut out = ScenarioOutcome {
        scenario: scenario.clone(),
        seed,
        report: VerificationReport::empty(scenario.id.as_str(), Provenance::new(scenario, seed)),
        solution: None,
        profile_curve: None,
        mesh: None,
    };
    if let Err(e) = pipeline(scenario, seed, &mut report, &mut out) {
        let (stage, source) = match e {
            Error::Stage { stage, source } => (stage, *source),
            other => ("run", other),
        };
        report.failure = Some(StageFailure { stage: stage.to_string(), message: source.to_string() });
    }
    report.pass = report.failure.is_none() && !report.criteria.is_empty() && report.criteria.iter().all(|c| c.passed);
    out.report = report;
    out
}

fn pipeline(s: &Scenario, seed: u64, report: &mut VerificationReport, out: &mut ScenarioOutcome) -> Result<()> {
    s.validate().map_err(|e| e.at_stage("validate"))?;
    let tol = &s.tolerances;
    let h = s.resolution;

    let solved = solve(s).map_err(|e| e.at_stage("solve"))?;
    let diagnostics = match &solved {
        Solved::Graph(sol) => SolverDiagnostics::from_graph(sol),
        Solved::Profile(p) => SolverDiagnostics::from_profile(p, s),
    };
    report.criteria.push(Criterion::at_most("solver_residual", diagnostics.final_residual, tol.solver_residual));
    report.solver = Some(diagnostics);

    let mesh = build_mesh(s, &solved).map_err(|e| e.at_stage("mesh"))?;
    report.provenance.mesh_h = Some(mesh.mesh_h());
    match solved {
        Solved::Graph(sol) => out.solution = Some(sol),
        Solved::Profile(p) => out.profile_curve = Some(p),
    }
    out.mesh = Some(mesh);
    let mesh = out.mesh.as_ref().expect("just set");

    let symmetry = sweep(s, mesh, seed).map_err(|e| e.at_stage("sweep"))?;
    let dev_tol = symmetry.tolerances.deviation;
    // Curves symmetric about a line only promise a mirror plane, not an axis.
    let mirror_only = s.mirror_line().is_some();
    let passed = match (&symmetry.verdict, mirror_only) {
        (Verdict::Asymmetric { .. }, _) => false,
        (_, true) => true,
        (v, false) => matches!(v, Verdict::Symmetric),
    };
    report.criteria.push(Criterion::flag(
        "symmetric_verdict",
        passed,
        match &symmetry.verdict {
            Verdict::Symmetric => "every sweep ended in a symmetry plane through a common axis".to_string(),
            Verdict::Asymmetric { witness, deviation, .. } => {
                format!("direction {witness} stopped with deviation {deviation:e}")
            }
            Verdict::Undetermined { reason } => reason.clone(),
        },
    ));
    report.criteria.push(Criterion::at_most("max_deviation", symmetry.max_deviation, dev_tol));
    if !mirror_only {
        let residual = symmetry.axis.map_or(f64::INFINITY, |a| a.residual);
        report.criteria.push(Criterion::at_most("axis_residual", residual, tol.axis_residual));
    }
    if let Some(c) = location_criterion(s, &symmetry, tol.location_factor * h) {
        report.criteria.push(c);
    }

    if let Some(sol) = &out.solution {
        let ell = verify_ellipticity_bound(&sol.u, tol.ellipticity_samples, seed).map_err(|e| e.at_stage("ellipticity"))?;
        let summary = EllipticitySummary::from(&ell);
        report.criteria.push(Criterion::at_most("ellipticity_violations", summary.violations as f64, 0.0));
        report.ellipticity = Some(summary);

        let spot = touching_spot_check(s, sol, &symmetry).map_err(|e| e.at_stage("touching"))?;
        report.criteria.push(Criterion::flag(
            "touching_spot_check",
            !matches!(spot.verdict.conclusion, Conclusion::Violated { .. }),
            format!("reflection across plane {} at node {}", spot.plane_index, spot.verdict.x0),
        ));
        report.touching = Some(spot);
    }
    report.symmetry = Some(symmetry);
    Ok(())
}

fn domain(s: &Scenario) -> Result<Region> {
    match (&s.domain, &s.bc) {
        (Some(r), _) => Ok(r.clone()),
        (None, BoundaryConditionSpec::FixedBoundary { curves }) => region_from_curves(curves),
        (None, _) => Err(Error::Scenario("graph scenarios need a plate domain".into())),
    }
}

/// Solve the scenario's boundary value problem without meshing.
pub fn solve(s: &Scenario) -> Result<Solved> {
    match s.model {
        Model::Axisymmetric => {
            let BoundaryConditionSpec::ContactAngle { gamma1, gamma2 } = s.bc else {
                return Err(Error::Scenario("the axisymmetric model takes contact-angle data".into()));
            };
            Ok(Solved::Profile(solve_axisymmetric_profile(&s.slab, &s.h_profile, gamma1, gamma2, &s.solver)?))
        }
        Model::Graph => {
            let grid = Arc::new(DomainGrid::from_region(&domain(s)?, s.resolution)?);
            Ok(Solved::Graph(solve_graph(grid, &s.h_profile, &s.bc, Some(&s.slab), &s.solver)?))
        }
    }
}

fn outer_shape(region: &Region) -> Result<&Shape2> {
    match region {
        Region::Planar { outer, .. } => Ok(outer),
        Region::Interval { .. } => Err(Error::Scenario("scenarios need a planar domain".into())),
    }
}

fn shape_center(shape: &Shape2) -> [f64; 2] {
    match shape {
        Shape2::Circle { center, .. } => *center,
        other => other.centroid(),
    }
}

/// Surface mesh of a solution, closed against the plates, with the
/// scenario's perturbation applied.
pub fn build_mesh(s: &Scenario, solved: &Solved) -> Result<SurfaceMesh> {
    let spacing = s.mesh_spacing();
    let mesh = match solved {
        Solved::Profile(p) => {
            let r = p.x.iter().copied().fold(0.0, f64::max);
            let n_theta = shapes::ring_count(std::f64::consts::TAU * r, spacing).max(16);
            p.revolve(&s.slab, [0.0, 0.0], n_theta, spacing)?
        }
        Solved::Graph(sol) => {
            let axis = s.slab.axis3()?;
            if (axis - Vec3::z()).norm() > 1e-12 {
                return Err(Error::Scenario("graph meshes need the slab axis along +z".into()));
            }
            let u = &sol.u;
            let height = |p: [f64; 2]| u.interpolate(&p);
            let region = domain(s)?;
            match &region {
                Region::Planar { outer, holes, .. } if holes.len() == 1 => {
                    let inner = &holes[0].0;
                    let (center, start) = match (s.circle_center(), s.mirror_line()) {
                        (Some(c), _) => (c, 0.0),
                        (None, Some(alpha)) => {
                            let c = shape_center(outer);
                            let d = alpha.direction;
                            let t = (c[0] - alpha.point[0]) * d[0] + (c[1] - alpha.point[1]) * d[1];
                            ([alpha.point[0] + t * d[0], alpha.point[1] + t * d[1]], d[1].atan2(d[0]))
                        }
                        (None, None) => (shape_center(inner), 0.0),
                    };
                    shapes::annulus_graph(&s.slab, inner, outer, center, start, spacing, height)?
                }
                Region::Planar { holes, .. } if holes.len() > 1 => {
                    return Err(Error::Scenario("meshing supports at most one hole".into()))
                }
                _ => {
                    let outer = outer_shape(&region)?;
                    shapes::graph_column(&s.slab, outer, shape_center(outer), spacing, height)?
                }
            }
        }
    };
    let tol = 1e-9 * s.slab.thickness();
    if let Some(v) = mesh.vertices().iter().find(|v| !s.slab.contains(v, tol)) {
        return Err(Error::Scenario(format!(
            "the surface leaves the slab at ({:.4}, {:.4}, {:.4})",
            v.x, v.y, v.z
        )));
    }
    match &s.perturbation {
        None => Ok(mesh),
        Some(p) => {
            let at = match p.at {
                Some(a) => Vec3::new(a[0], a[1], a[2]),
                None => default_bump_site(&mesh),
            };
            shapes::bump(&mesh, at, p.amplitude, p.width.unwrap_or(4.0 * spacing))
        }
    }
}

/// Non-plate vertex nearest, in plate coordinates, to a point halfway out
/// from the middle of the surface.
fn default_bump_site(mesh: &SurfaceMesh) -> Vec3 {
    let (lo, hi) = mesh.bbox();
    let mid = (lo + hi) * 0.5;
    let r = 0.5 * (hi.x - lo.x).max(hi.y - lo.y);
    let target = [mid.x + 0.5 * r * 0.3f64.cos(), mid.y + 0.5 * r * 0.3f64.sin()];
    let plates = mesh.vertex_plates();
    mesh.vertices()
        .iter()
        .zip(&plates)
        .filter(|(_, p)| p.is_none())
        .map(|(v, _)| *v)
        .min_by(|a, b| {
            let da = (a.x - target[0]).hypot(a.y - target[1]);
            let db = (b.x - target[0]).hypot(b.y - target[1]);
            da.total_cmp(&db)
        })
        .unwrap_or(mid)
}

/// Sweep the scenario's directions through `mesh` and fit the axis.
pub fn sweep(s: &Scenario, mesh: &SurfaceMesh, seed: u64) -> Result<SymmetryReport> {
    let dirs = sweep_directions(&s.slab, s.directions, s.start_angle(), s.direction_jitter, seed)?;
    let results = sweep_all(mesh, &dirs, &s.sweep)?;
    let h = mesh.mesh_h();
    let tol = SymmetryTolerances { deviation: s.tolerances.deviation_factor * h * h, axis_residual: s.tolerances.axis_residual };
    extract_symmetry_axis(results, &s.slab, tol)
}

/// Where the theorem puts the symmetry: a plane through the mirror line of
/// the boundary curves, or an axis through a known center.
fn location_criterion(s: &Scenario, sym: &SymmetryReport, within: f64) -> Option<Criterion> {
    let axis_near = |name: &str, c: [f64; 2]| {
        let d = sym.axis.map_or(f64::INFINITY, |a| a.distance_to(&Vec3::new(c[0], c[1], s.slab.offset_lo)));
        Criterion::at_most(name, d, within)
    };
    match (s.id, &s.bc) {
        (ScenarioId::T2, _) => match (s.mirror_line(), s.circle_center()) {
            (Some(alpha), _) => {
                let n = alpha.normal();
                let n3 = Vec3::new(n[0], n[1], 0.0);
                let p3 = Vec3::new(alpha.point[0], alpha.point[1], s.slab.offset_lo);
                let best = sym
                    .results
                    .iter()
                    .filter(|r| r.deviation <= sym.tolerances.deviation)
                    .filter(|r| r.symmetry_plane.normal.dot(&n3).abs() > 1.0 - 1e-6)
                    .map(|r| r.symmetry_plane.signed_distance(&p3).abs())
                    .fold(f64::INFINITY, f64::min);
                Some(Criterion::at_most("plane_through_mirror_line", best, within))
            }
            (None, Some(c)) => Some(axis_near("axis_through_common_center", c)),
            (None, None) => None,
        },
        (ScenarioId::T4, BoundaryConditionSpec::RadialFlux { origin, .. }) => Some(axis_near("axis_through_origin", *origin)),
        _ => None,
    }
}

fn touching_spot_check(s: &Scenario, sol: &GraphSolution, sym: &SymmetryReport) -> Result<TouchingSpotCheck> {
    let (plane_index, result) = sym
        .results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.deviation.total_cmp(&b.1.deviation).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::invalid("no sweep results"))?;
    let plane = result.symmetry_plane;
    let u = &sol.u;
    let grid = u.grid().clone();
    let ubar = reflect_field(u, &plane)?;
    let w = u.zip_map(&ubar, |a, b| a - b)?;
    let x0 = grid
        .interior_nodes()
        .min_by(|&a, &b| {
            let da = plane.signed_distance(&Vec3::new(grid.coords(a)[0], grid.coords(a)[1], 0.0)).abs();
            let db = plane.signed_distance(&Vec3::new(grid.coords(b)[0], grid.coords(b)[1], 0.0)).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .ok_or_else(|| Error::invalid("grid has no interior nodes"))?;
    let op = assemble_difference_operator(u, &ubar, &s.h_profile, DEFAULT_PANELS)?;
    let verdict = check_interior_touching(&op, &w, x0)?;
    Ok(TouchingSpotCheck { plane_index, max_abs_difference: w.max_abs(), verdict })
}

/// `u ∘ R` on the grid of `u`, for the reflection `R` across a plane
/// orthogonal to the plates.
pub fn reflect_field(u: &ScalarField, plane: &Plane) -> Result<ScalarField> {
    let grid = u.grid().clone();
    let values = grid
        .active_nodes()
        .iter()
        .map(|&k| {
            let x = grid.coords(k);
            let d = plane.signed_distance(&Vec3::new(x[0], x[1], plane.point.z));
            u.interpolate(&[x[0] - 2.0 * d * plane.normal.x, x[1] - 2.0 * d * plane.normal.y])
        })
        .collect::<Result<Vec<f64>>>()?;
    ScalarField::new(grid, values)
}

/// Vertical plane through the middle of the scenario's domain with normal at
/// `angle` in the plate.
pub fn central_plane(s: &Scenario, angle: f64) -> Result<Plane> {
    let region = domain(s)?;
    let c = shape_center(outer_shape(&region)?);
    Plane::new(Vec3::new(c[0], c[1], s.slab.offset_lo), Vec3::new(angle.cos(), angle.sin(), 0.0))
}
