//! Scenario files and the end-to-end verification pipeline.
//!
//! A scenario fixes the slab, the prescribed curvature, the boundary
//! condition and the resolutions. [`run_scenario`] solves it, meshes the
//! surface, sweeps planes through it and collects pass/fail criteria into a
//! [`VerificationReport`].

mod report;
mod run;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvature::{AxisLine, PrescribedH};
use crate::error::{Error, Result};
use crate::geometry::{Region, Shape2, Slab};
use crate::moving_plane::SweepSettings;
use crate::solver::{BoundaryConditionSpec, SolverSettings};

pub use report::{
    export_artifacts, Criterion, EllipticitySummary, Provenance, SolverDiagnostics, StageFailure, TouchingSpotCheck,
    VerificationReport,
};
pub use run::{build_mesh, central_plane, reflect_field, run_scenario, solve, sweep, ScenarioOutcome, Solved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioId {
    T1,
    T2,
    T3,
    T4,
    #[serde(rename = "custom")]
    Custom,
}

impl ScenarioId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::T1 => "T1",
            ScenarioId::T2 => "T2",
            ScenarioId::T3 => "T3",
            ScenarioId::T4 => "T4",
            ScenarioId::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Newton solve for a graph over a plate domain, closed into a column.
    #[default]
    Graph,
    /// Shooting for a meridian, revolved about the vertical through the
    /// origin.
    Axisymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioTolerances {
    /// Symmetry planes need deviation at most this times `h²`.
    pub deviation_factor: f64,
    /// Largest distance from the fitted axis to a symmetry plane.
    pub axis_residual: f64,
    /// Planes and axes must lie within this many `h` of the expected
    /// location.
    pub location_factor: f64,
    /// Final Newton residual.
    pub solver_residual: f64,
    /// Random directions per node in the ellipticity check.
    pub ellipticity_samples: usize,
}

impl Default for ScenarioTolerances {
    fn default() -> Self {
        Self {
            deviation_factor: 10.0,
            axis_residual: 1e-5,
            location_factor: 2.0,
            solver_residual: 1e-9,
            ellipticity_samples: 8,
        }
    }
}

/// Gaussian bump pushed along the vertex normals of the surface mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    /// Center of the bump; defaults to a point halfway out from the middle
    /// of the surface.
    #[serde(default)]
    pub at: Option<[f64; 3]>,
    #[serde(default)]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: ScenarioId,
    #[serde(default)]
    pub description: Option<String>,
    pub slab: Slab,
    #[serde(rename = "H")]
    pub h_profile: PrescribedH,
    pub bc: BoundaryConditionSpec,
    /// Plate domain of the graph; derived from the curves for fixed
    /// boundaries.
    #[serde(default)]
    pub domain: Option<Region>,
    #[serde(default)]
    pub model: Model,
    /// Grid spacing `h`.
    pub resolution: f64,
    /// Target edge length of the surface mesh; defaults to `resolution`.
    #[serde(default)]
    pub mesh_spacing: Option<f64>,
    #[serde(default)]
    pub tolerances: ScenarioTolerances,
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Angle of the first sweep direction; T2 aligns it with the normal of
    /// the mirror line when left unset.
    #[serde(default)]
    pub direction_offset: Option<f64>,
    #[serde(default)]
    pub direction_jitter: f64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
}

fn default_directions() -> usize {
    8
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { context: "scenario".into(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { context: path.display().to_string(), message: e.to_string() })
    }

    pub fn mesh_spacing(&self) -> f64 {
        self.mesh_spacing.unwrap_or(self.resolution)
    }

    /// Common mirror line of the fixed boundary curves, if they carry one.
    pub fn mirror_line(&self) -> Option<AxisLine> {
        match &self.bc {
            BoundaryConditionSpec::FixedBoundary { curves } => {
                let first = curves.first()?.axis?;
                curves.iter().all(|c| c.axis.is_some()).then_some(first)
            }
            _ => None,
        }
    }

    /// Common center of fixed boundary curves that are all exact circles.
    pub fn circle_center(&self) -> Option<[f64; 2]> {
        let BoundaryConditionSpec::FixedBoundary { curves } = &self.bc else { return None };
        let centers: Vec<[f64; 2]> = curves
            .iter()
            .map(|c| match &c.exact {
                Some(Shape2::Circle { center, .. }) => Some(*center),
                _ => None,
            })
            .collect::<Option<_>>()?;
        let c0 = *centers.first()?;
        centers.iter().all(|c| (c[0] - c0[0]).hypot(c[1] - c0[1]) <= 1e-12).then_some(c0)
    }

    pub fn start_angle(&self) -> f64 {
        if let Some(a) = self.direction_offset {
            return a;
        }
        match self.mirror_line() {
            Some(alpha) => {
                let n = alpha.normal();
                n[1].atan2(n[0])
            }
            None => 0.0,
        }
    }

    /// Check the preconditions of the scenario's theorem before any work.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Scenario(m));
        self.slab.validate()?;
        if self.slab.ambient_dim() != 3 {
            return fail("scenarios live between plates in three-dimensional space".into());
        }
        if !(self.resolution > 0.0) || !(self.mesh_spacing() > 0.0) {
            return fail(format!("resolution must be positive, got {}", self.resolution));
        }
        if self.directions < 2 {
            return fail("at least two sweep directions are needed to find an axis".into());
        }
        if !(0.0..=1.0).contains(&self.direction_jitter) {
            return fail("direction_jitter must lie in [0, 1]".into());
        }
        self.solver.validate()?;
        self.sweep.validate()?;
        if let (ScenarioId::T3, BoundaryConditionSpec::CurvatureFlux { h, range }) = (self.id, &self.bc) {
            for f in h {
                f.check_nonincreasing(range[0], range[1], 257)
                    .map_err(|e| Error::Scenario(format!("T3 needs nonincreasing flux functions h_i: {e}")))?;
            }
        }
        self.bc.validate().map_err(|e| Error::Scenario(format!("boundary data: {e}")))?;
        match (self.id, &self.bc) {
            (ScenarioId::T1, BoundaryConditionSpec::ContactAngle { .. }) => {}
            (ScenarioId::T1, _) => return fail("T1 needs constant contact angles on both plates".into()),
            (ScenarioId::T2, BoundaryConditionSpec::FixedBoundary { curves }) => {
                if curves.len() != 2 {
                    return fail("T2 needs one boundary curve on each plate".into());
                }
                if self.mirror_line().is_none() && self.circle_center().is_none() {
                    return fail(
                        "T2 needs boundary curves symmetric about a common line or circles with a common center".into(),
                    );
                }
                if let Some(alpha) = self.mirror_line() {
                    for c in curves {
                        let defect = c.symmetry_defect(&alpha);
                        if defect > 1e-9 * c.diameter() {
                            return fail(format!("curve on plate {} is not symmetric about its axis ({defect:e})", c.plate));
                        }
                        if c.axis.map_or(true, |a| !same_line(&a, &alpha)) {
                            return fail("the two boundary curves have different symmetry lines".into());
                        }
                    }
                }
            }
            (ScenarioId::T2, _) => return fail("T2 needs fixed boundary curves".into()),
            (ScenarioId::T3, BoundaryConditionSpec::CurvatureFlux { .. }) => {}
            (ScenarioId::T3, _) => return fail("T3 needs curvature-dependent flux data".into()),
            (ScenarioId::T4, BoundaryConditionSpec::RadialFlux { .. }) => {}
            (ScenarioId::T4, _) => return fail("T4 needs radial flux data".into()),
            (ScenarioId::Custom, _) => {}
        }
        match self.model {
            Model::Axisymmetric => {
                if !matches!(self.bc, BoundaryConditionSpec::ContactAngle { .. }) {
                    return fail("the axisymmetric model takes contact-angle data".into());
                }
            }
            Model::Graph => {
                let needs_domain = !matches!(self.bc, BoundaryConditionSpec::FixedBoundary { .. });
                match (&self.domain, needs_domain) {
                    (None, true) => return fail("graph scenarios need a plate domain".into()),
                    (Some(Region::Planar { holes, .. }), true) if !holes.is_empty() => {
                        return fail("column meshes need a domain without holes".into())
                    }
                    (Some(Region::Interval { .. }), _) => return fail("scenarios need a planar domain".into()),
                    (Some(r), _) => r.validate()?,
                    (None, false) => {}
                }
            }
        }
        if let Some(p) = &self.perturbation {
            if !p.amplitude.is_finite() || matches!(p.width, Some(w) if !(w > 0.0)) {
                return fail("perturbation needs a finite amplitude and a positive width".into());
            }
        }
        Ok(())
    }
}

fn same_line(a: &AxisLine, b: &AxisLine) -> bool {
    let cross = a.direction[0] * b.direction[1] - a.direction[1] * b.direction[0];
    cross.abs() < 1e-12 && b.distance(a.point) < 1e-12
}
