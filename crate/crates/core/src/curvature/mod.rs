//! Mean curvature of graphs, prescribed curvature profiles, and curvature of
//! plate boundary curves.
//!
//! Sign convention: for the graph `x_{n+1} = u(x)` with upward normal
//! `(-grad u, 1)/W`, the mean curvature is `H = mc(u) / n` where
//! `mc(u) = div(grad u / W)`. The upper hemisphere of radius `R` has
//! `H = -1/R`.

pub mod boundary;
pub mod operator;
pub mod profile;

pub use boundary::{boundary_mean_curvature, AxisLine, BoundaryCurve};
pub use operator::{mc_at, mc_divergence_form, mc_expanded, mc_from_derivatives};
pub use profile::{eval_H, CubicSpline, GeneralH, PrescribedH};
