//! Finite-volume projection solver for the 2D incompressible Navier-Stokes
//! equations on admissible (acute) triangular meshes.
//!
//! Velocity lives in piecewise constants per triangle, pressure in the
//! Crouzeix-Raviart space (one value per edge midpoint). Time stepping is a
//! BDF2 incremental projection: an implicit momentum prediction with upwind
//! convection and the two-point diffusion operator, a pressure Poisson solve
//! on the nonconforming space, and a gradient correction that leaves the
//! velocity with continuous normal components across every interior edge.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fields;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod par;
pub mod quadrature;
pub mod scheme;
pub mod verification;

pub use error::{Error, Result};
pub use fields::{P0Scalar, P0Vector, P1ncField, Rt0Flux};
pub use mesh::Mesh;

/// A point or vector in the plane.
pub type Point = [f64; 2];
