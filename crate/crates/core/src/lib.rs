//! Discrete total variation of the unit normal on triangulated surfaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: surface and tetrahedral meshes, oriented-edge topology, file IO
//!   and procedural generators.
//! - [`s2`]: Riemannian toolbox on the unit sphere (distance, exp, log,
//!   parallel transport).
//! - [`functionals`]: total variation of the normal, its Euclidean variant,
//!   surface area and the cotangent Lagrangian gradient.
//! - [`shapegrad`]: closed-form vertex derivatives and the H¹(Γ) Riesz map.
//! - [`bregman`]: the Riemannian split Bregman iteration and a smooth
//!   gradient-descent driver.
//! - [`fem`]: P1 tetrahedral finite elements for the EIT inclusion problem.
//! - [`experiments`]: drivers for the tables, the denoising comparison and the
//!   EIT inversion.

pub mod bregman;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod functionals;
pub mod linalg;
pub mod mesh;
pub mod s2;
pub mod shapegrad;

pub use error::{Error, Result};
pub use functionals::{FunctionalValue, VertexField};
pub use mesh::{EdgeGeometry, OrientedEdge, SurfaceMesh, TetMesh};
pub use s2::{SpherePoint, TangentVector};

/// Vectors in ambient space.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 matrices, used for Jacobians.
pub type Mat3 = nalgebra::Matrix3<f64>;
