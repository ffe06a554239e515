//! Magnitude of metric spaces and the geometry of its large-scale expansion.
//!
//! * [`metric`]: exact magnitude of finite metric spaces.
//! * [`domain`] and [`sampler`]: compact Euclidean domains and lower-bound
//!   magnitude estimates from nested finite samples.
//! * [`geometry`]: volume, area, mean-curvature integral and Willmore energy
//!   of smooth boundaries, plus Steiner-formula intrinsic volumes.
//! * [`asymptotics`]: predicted expansion coefficients, curve fitting, the
//!   `lambda_3` calibration and the ellipsoid experiment.
//! * [`symbol`]: exact parameter-dependent polyhomogeneous symbol calculus.
//! * [`manifest`]: run records written beside command-line outputs.

pub mod asymptotics;
pub mod domain;
pub mod error;
pub mod geometry;
pub mod manifest;
pub mod metric;
pub mod sampler;
pub mod symbol;

pub use error::{Error, Result};
