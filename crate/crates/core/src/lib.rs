//! Articulated hand pose tracking from depth image sequences.
//!
//! A linear-blend-skinned mesh driven by a twist-parameterized kinematic
//! skeleton is fitted to each depth frame by damped Gauss-Newton over an
//! objective with four terms: model-to-data surface alignment, data-to-model
//! silhouette alignment, a cone-field penetration penalty between colliding
//! triangles, and an assignment-gated salient point (fingertip) term.
//!
//! Module map:
//! - [`kinematics`]: twists, the exponential map, kinematic chains, joint limits and
//!   analytic point Jacobians.
//! - [`skinned_model`]: skinned meshes, LBS deformation, normals, the pinhole camera,
//!   z-buffer rendering and visibility, plus a procedural test hand.
//! - [`sensor`]: depth-frame preprocessing into an [`sensor::ObservedFrame`].
//! - [`collision`]: BVH, triangle-triangle tests and the penetration field.
//! - [`registration`]: correspondences, residual blocks, the assignment program and the
//!   per-frame optimizer.
//! - [`harness`]: synthetic sequences, evaluation, batch tracking and sweeps.

pub mod collision;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kinematics;
pub mod par;
pub mod registration;
pub mod residual;
pub mod sensor;
pub mod skinned_model;

pub use error::{Error, Result};
pub use grid::Grid;

/// 3-vector in millimetres unless stated otherwise.
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
