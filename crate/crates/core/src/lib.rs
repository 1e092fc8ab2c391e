//! Phase-space Bell-type tests of nonclassicality and genuine quantum
//! non-Gaussianity for single-mode bosonic states.
//!
//! Quadratures follow `q = (a + a†)/2`, `p = (a - a†)/(2i)`, so the vacuum
//! variance is 1/4 and a complex amplitude is `α = q + ip`. Only
//! non-positive order parameters `s ≤ 0` are supported.

pub mod bounds;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod linalg;
pub mod nonlocality;
pub mod optimize;
pub mod quasiprob;
pub mod special;
pub mod spec;
pub mod states;
pub mod statistics;

pub use error::{Error, Result};
pub use geometry::{
    BaseRectangle, OrderParameter, PhaseSpacePoint, PointGeometry, Shape, SqueezeMap, Vertex,
};
pub use num_complex::Complex64 as C64;
pub use states::{FockDensityMatrix, GaussianState, LossChannel, State};

/// Gaussian-mixture bound of the four-point tests at `s = 0`, `8/3^{9/8}`.
pub fn four_point_gaussian_bound() -> f64 {
    8.0 / 3f64.powf(9.0 / 8.0)
}

/// Gaussian-mixture bound of the three-point tests at `s = 0`.
pub const THREE_POINT_GAUSSIAN_BOUND: f64 = 2.0;

/// Margin above a bound that a value must exceed to count as a violation.
pub const VIOLATION_MARGIN: f64 = 1e-9;
