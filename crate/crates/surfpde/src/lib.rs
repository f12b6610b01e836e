//! Meshfree approximation of differential operators on point-cloud surfaces.
//!
//! The crate builds sparse surface differential operators (Laplace-Beltrami,
//! surface advection, hyperviscosity, interpolation) from scattered nodes
//! with normals, using polyharmonic-spline RBF-FD on stencils extended off
//! the surface along node normals. On top of the operators sit explicit and
//! implicit-explicit time integrators and ready-made reaction-diffusion,
//! advection and moving-surface problem drivers.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod moving;
pub mod operators;
pub mod problems;
pub mod rbf;
pub mod stencil;
pub mod timestep;

pub use error::{Result, SurfError};
