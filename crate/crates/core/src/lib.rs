//! Kinetic and hydrodynamic solvers for the linear dissipative Boltzmann
//! equation with a pseudo-Maxwellian collision rate.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameters, Maxwellians, the inelastic collision rule, the
//!   `S(t, x)` rate closures and the analytic fixed points.
//! * [`dsmc`]: an exact stochastic particle simulation of the kinetic model,
//!   used as ground truth.
//! * [`moments`]: the homogeneous `(u, T)` moment system and its integrator.
//! * [`euler`]: a first-order finite-volume solver for the dissipative Euler
//!   system in one space dimension.

pub mod dsmc;
pub mod error;
pub mod euler;
pub mod grid;
pub mod initial;
pub mod model;
pub mod moments;
pub mod quadrature;
pub mod rng;
pub mod vec3;

pub use error::{Error, Result};
pub use grid::Grid1D;
pub use initial::InitialCondition;
pub use model::{AlphaConvention, BackgroundState, Conventions, ModelParams, MomentState, SClosure};
pub use vec3::Vec3;
