//! Tukey-depth landscapes of convex polytopes under the uniform measure,
//! barycentric hyperplanes as critical points of the depth field, and generic
//! critical-point machinery for scalar fields on spheres.

pub mod bodies;
pub mod critical;
pub mod depth;
pub mod descent;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod recipes;
pub mod sphere;
pub mod synthetic;

pub use error::{Error, Result};
