use serde::{Deserialize, Serialize};

/// Central tolerance record shared by every module.
///
/// Algebraic identities (reflection involution, coefficient symmetry) are
/// checked against `algebraic`; claims about discretization accuracy scale
/// with the squared grid spacing through `discretization_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub algebraic: f64,
    pub discretization_factor: f64,
    pub unit_length: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { algebraic: 1e-10, discretization_factor: 5.0, unit_length: 1e-12 }
    }
}

impl Tolerances {
    /// Discretization tolerance `factor * h^2` for grid spacing `h`.
    pub fn discretization(&self, h: f64) -> f64 {
        self.discretization_factor * h * h
    }
}
