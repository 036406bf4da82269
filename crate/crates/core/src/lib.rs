//! Prescribed mean curvature surfaces trapped between two parallel plates.
//!
//! The crate solves capillary-type surfaces in a slab under several boundary
//! conditions (contact angle, fixed boundary, curvature-dependent flux, radial
//! flux) and certifies their rotational symmetry with the moving-plane
//! reflection procedure.
//!
//! Module map:
//! - [`geometry`]: slabs, planes, masked grids, scalar fields, triangle meshes.
//! - [`curvature`]: the mean curvature operator, prescribed profiles `H`, and
//!   curvature of planar boundary curves.
//! - [`linearization`]: the linear elliptic operator satisfied by the difference
//!   of two graphs, with its ellipticity certificate.
//! - [`touching`]: interior and boundary touching-principle verifiers.
//! - [`solver`]: Newton solver for graphs and shooting solver for axisymmetric
//!   drop profiles.
//! - [`moving_plane`]: reflection sweeps, first-touch detection, symmetry axis.
//! - [`harness`]: scenario files, end-to-end verification, artifact export.

pub mod curvature;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod linearization;
pub mod moving_plane;
pub mod settings;
pub mod solver;
pub mod touching;

pub use error::{Error, Result};
pub use settings::Tolerances;
