//! Grids, meshes, planes and the differential-geometric primitives.

pub mod bvh;
pub mod field;
pub mod fit;
pub mod grid;
pub mod mesh;
pub mod monge;
pub mod region;
pub mod shapes;
pub mod slab;

pub use field::{differentials, NodeDifferentials, ScalarField};
pub use grid::{DomainGrid, NodeTag};
pub use mesh::{BoundaryLoop, SurfaceMesh};
pub use monge::{monge_patch, MongePatch};
pub use region::{Region, Shape2};
pub use slab::{reflect, reflect_slice, Plane, Slab};

pub type Vec3 = nalgebra::Vector3<f64>;
