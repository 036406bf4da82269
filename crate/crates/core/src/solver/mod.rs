//! Discrete solutions of the prescribed mean curvature equation.
//!
//! [`graph`] runs Newton's method for nonparametric graphs `u` over a plate
//! domain; [`axisymmetric`] shoots rotationally symmetric meridians between
//! the plates.

pub mod axisymmetric;
pub mod graph;
pub mod ode;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curvature::{BoundaryCurve, CubicSpline};
use crate::error::{Error, Result};

pub use axisymmetric::{solve_axisymmetric_profile, ContactRecord, ProfileCurve};
pub use graph::region_from_curves;
pub use graph::{
    graph_residual, solve_graph, solve_graph_dirichlet, solve_graph_fixed, solve_graph_flux, GraphSolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Damping {
    /// Full Newton steps.
    None,
    /// Halve the step until the residual decreases, down to `min_step`.
    Backtracking { min_step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub damping: Damping,
    /// Number of stages ramping the amplitude of `H` from `1/steps` to 1.
    pub continuation_steps: usize,
    /// Search interval for the contact radius at the lower plate.
    pub shooting_bracket: [f64; 2],
    /// Local error tolerance of the meridian integrator.
    pub integrator_tol: f64,
    /// Largest integration step in height, as a fraction of the slab height.
    pub max_step_fraction: f64,
    /// Mean height fixing the additive constant of pure Neumann problems.
    pub mean_height: Option<f64>,
    /// Constant initial iterate for flux problems.
    pub initial_height: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_iterations: 40,
            damping: Damping::Backtracking { min_step: 1.0 / 64.0 },
            continuation_steps: 1,
            shooting_bracket: [0.05, 5.0],
            integrator_tol: 1e-10,
            max_step_fraction: 1.0 / 32.0,
            mean_height: None,
            initial_height: 0.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::invalid("newton_tol must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if self.continuation_steps < 1 {
            return Err(Error::invalid("continuation_steps must be at least 1"));
        }
        let [lo, hi] = self.shooting_bracket;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::invalid("shooting bracket must satisfy 0 < lo < hi"));
        }
        if !(self.integrator_tol > 0.0 && self.max_step_fraction > 0.0) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        Ok(())
    }
}

/// Scalar function of one variable used for flux data `h_i(H_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFunction {
    Constant { value: f64 },
    /// `intercept + slope * x`.
    Affine { intercept: f64, slope: f64 },
    Tabulated(CubicSpline),
}

impl ScalarFunction {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            ScalarFunction::Constant { value } => Ok(*value),
            ScalarFunction::Affine { intercept, slope } => Ok(intercept + slope * x),
            ScalarFunction::Tabulated(s) => s.eval(x).map(|v| v.0),
        }
    }

    /// Check `f(a) >= f(b)` for consecutive samples `a < b` of `[lo, hi]`.
    pub fn check_nonincreasing(&self, lo: f64, hi: f64, samples: usize) -> Result<()> {
        let (lo, hi) = match self {
            ScalarFunction::Tabulated(s) => s.range(),
            _ => (lo, hi),
        };
        let n = samples.max(2);
        let mut prev = self.eval(lo)?;
        for k in 1..n {
            let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let v = self.eval(x)?;
            if v > prev + 1e-12 * (1.0 + prev.abs()) {
                return Err(Error::invalid(format!("flux function increases near H0 = {x}")));
            }
            prev = v;
        }
        Ok(())
    }
}

pub type BoundaryFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Dirichlet data on the boundary nodes of a plate domain.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Constant {
        value: f64,
    },
    /// `value + gradient · x`.
    Affine {
        value: f64,
        gradient: Vec<f64>,
    },
    /// Upper (or lower) half of a sphere: `center_z ± sqrt(r² - |x - c|²)`.
    Sphere {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "upper")]
        upper: bool,
    },
    /// `mean + sum a_k cos(k θ) + b_k sin(k θ)` with `θ` the polar angle about
    /// `center`.
    Fourier {
        center: [f64; 2],
        mean: f64,
        terms: Vec<(u32, f64, f64)>,
    },
    #[serde(skip)]
    Function(BoundaryFn),
}

fn upper() -> bool {
    true
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Function(_) => f.write_str("Function(..)"),
            other => f.write_str(&serde_json::to_string(other).unwrap_or_default()),
        }
    }
}

impl BoundaryData {
    pub fn function(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData::Function(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryData::Constant { value } => *value,
            BoundaryData::Affine { value, gradient } => value + gradient.iter().zip(x).map(|(g, c)| g * c).sum::<f64>(),
            BoundaryData::Sphere { center, radius, upper } => {
                let n = x.len();
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                let s = (radius * radius - d2).max(0.0).sqrt();
                let cz = center.get(n).copied().unwrap_or(0.0);
                if *upper {
                    cz + s
                } else {
                    cz - s
                }
            }
            BoundaryData::Fourier { center, mean, terms } => {
                let th = (x[1] - center[1]).atan2(x[0] - center[0]);
                mean + terms.iter().map(|&(k, a, b)| a * (k as f64 * th).cos() + b * (k as f64 * th).sin()).sum::<f64>()
            }
            BoundaryData::Function(f) => f(x),
        }
    }
}

/// Boundary conditions attached to the plates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryConditionSpec {
    /// `∇u·η / W = cos γ_i` on the part of the boundary on plate `i`.
    ContactAngle { gamma1: f64, gamma2: f64 },
    /// Prescribed boundary curves, the surface meeting plate `i` along curve
    /// `i`.
    FixedBoundary { curves: Vec<BoundaryCurve> },
    /// `∂u/∂η = h_i(H_0)` with `H_0` the boundary mean curvature. One entry
    /// applies to both plates.
    CurvatureFlux {
        h: Vec<ScalarFunction>,
        #[serde(default = "default_h0_range")]
        range: [f64; 2],
    },
    /// `∂u/∂η = -c r`, `r` the distance to `origin`.
    RadialFlux { c: f64, origin: [f64; 2] },
    Dirichlet { g: BoundaryData },
}

fn default_h0_range() -> [f64; 2] {
    [-10.0, 10.0]
}

impl BoundaryConditionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoundaryConditionSpec::ContactAngle { gamma1, gamma2 } => {
                for g in [gamma1, gamma2] {
                    check_angle(*g)?;
                }
                Ok(())
            }
            BoundaryConditionSpec::FixedBoundary { curves } => {
                if curves.is_empty() {
                    return Err(Error::invalid("fixed boundary needs at least one curve"));
                }
                curves.iter().try_for_each(BoundaryCurve::validate)
            }
            BoundaryConditionSpec::CurvatureFlux { h, range } => {
                if h.is_empty() || h.len() > 2 {
                    return Err(Error::invalid("curvature flux needs one or two flux functions"));
                }
                h.iter().try_for_each(|f| f.check_nonincreasing(range[0], range[1], 257))
            }
            BoundaryConditionSpec::RadialFlux { c, .. } => {
                if !(*c > 0.0) {
                    return Err(Error::invalid(format!("radial flux constant must be positive, got {c}")));
                }
                Ok(())
            }
            BoundaryConditionSpec::Dirichlet { .. } => Ok(()),
        }
    }
}

/// Contact angles must lie strictly between 0 and π.
pub fn check_angle(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < PI {
        Ok(())
    } else {
        Err(Error::invalid(format!("contact angle {gamma} must lie in (0, π)")))
    }
}
