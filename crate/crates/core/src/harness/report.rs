use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::run::ScenarioOutcome;
use super::Scenario;
use crate::error::Result;
use crate::io::{field_to_csv, write_mesh, write_text};
use crate::linearization::EllipticityReport;
use crate::moving_plane::SymmetryReport;
use crate::solver::{BoundaryConditionSpec, GraphSolution, ProfileCurve};
use crate::touching::TouchingVerdict;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    /// SHA-256 of the canonical scenario JSON followed by the seed.
    pub config_hash: String,
    pub seed: u64,
    pub resolution: f64,
    pub mesh_h: Option<f64>,
    pub version: String,
}

impl Provenance {
    pub fn new(scenario: &Scenario, seed: u64) -> Self {
        let json = serde_json::to_string(scenario).unwrap_or_default();
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hasher.update(seed.to_le_bytes());
        Self {
            config_hash: hex::encode(hasher.finalize()),
            seed,
            resolution: scenario.resolution,
            mesh_h: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub method: String,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// Residual compared against the solver tolerance: the last Newton
    /// residual, or the upper contact-angle mismatch for shooting.
    pub final_residual: f64,
    pub interior_residual: Option<f64>,
    pub boundary_residual: Option<f64>,
    pub contact_radii: Option<[f64; 2]>,
}

impl SolverDiagnostics {
    pub fn from_graph(sol: &GraphSolution) -> Self {
        Self {
            method: "newton".into(),
            iterations: sol.iterations,
            history: sol.history.clone(),
            final_residual: sol.history.last().copied().unwrap_or(f64::INFINITY),
            interior_residual: Some(sol.interior_residual),
            boundary_residual: Some(sol.boundary_residual),
            contact_radii: None,
        }
    }

    pub fn from_profile(p: &ProfileCurve, scenario: &Scenario) -> Self {
        let target = match scenario.bc {
            BoundaryConditionSpec::ContactAngle { gamma2, .. } => gamma2,
            _ => f64::NAN,
        };
        Self {
            method: "shooting".into(),
            iterations: 0,
            history: Vec::new(),
            final_residual: (p.contacts[1].angle - target).abs(),
            interior_residual: None,
            boundary_residual: None,
            contact_radii: Some([p.contacts[0].radius, p.contacts[1].radius]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticitySummary {
    pub checks: usize,
    pub violations: usize,
    pub equality_gap: f64,
}

impl From<&EllipticityReport> for EllipticitySummary {
    fn from(r: &EllipticityReport) -> Self {
        Self { checks: r.checks, violations: r.violations.len(), equality_gap: r.equality_gap }
    }
}

/// Touching check on `w = u - u∘R` for the reflection `R` across the best
/// symmetry plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchingSpotCheck {
    pub plane_index: usize,
    pub max_abs_difference: f64,
    pub verdict: TouchingVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: Option<String>,
}

impl Criterion {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value: value.is_finite().then_some(value),
            threshold: Some(threshold),
            detail: None,
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value: None, threshold: None, detail: Some(detail.into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub scenario_id: String,
    pub provenance: Provenance,
    pub solver: Option<SolverDiagnostics>,
    pub symmetry: Option<SymmetryReport>,
    pub ellipticity: Option<EllipticitySummary>,
    pub touching: Option<TouchingSpotCheck>,
    pub criteria: Vec<Criterion>,
    pub pass: bool,
    pub failure: Option<StageFailure>,
}

impl VerificationReport {
    pub fn empty(scenario_id: &str, provenance: Provenance) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            provenance,
            solver: None,
            symmetry: None,
            ellipticity: None,
            touching: None,
            criteria: Vec::new(),
            pass: false,
            failure: None,
        }
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Write the report, mesh, field and sweep profiles under `dir`. Returns the
/// paths written, in a fixed order.
pub fn export_artifacts(outcome: &ScenarioOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let report = dir.join("report.json");
    write_text(&report, &outcome.report.to_json()?)?;
    written.push(report);
    if let Some(mesh) = &outcome.mesh {
        written.extend(write_mesh(mesh, &dir.join("mesh.obj"))?);
    }
    if let Some(sol) = &outcome.solution {
        let path = dir.join("field.csv");
        write_text(&path, &field_to_csv(&sol.u))?;
        written.push(path);
    }
    if let Some(p) = &outcome.profile_curve {
        let path = dir.join("meridian.csv");
        write_text(&path, &p.to_csv())?;
        written.push(path);
    }
    if let Some(sym) = &outcome.report.symmetry {
        for (k, r) in sym.results.iter().enumerate() {
            let path = dir.join(format!("sweep_{k:02}.csv"));
            write_text(&path, &r.profile_csv())?;
            written.push(path);
        }
    }
    Ok(written)
}
