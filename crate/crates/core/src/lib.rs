//! Numerical laboratory for the 1-D compressible Navier-Stokes/Allen-Cahn
//! system in Lagrangian coordinates.
//!
//! The crate implements the nonlinear system, its modified parabolic
//! approximation, the full linearized spectral machinery (eigenstructure,
//! projections, Green symbols and kernels), pseudo-spectral time integration
//! on a periodic box, and decay-rate measurement against the theoretical
//! algebraic and exponential targets.

pub mod cli;
pub mod decay;
pub mod error;
pub mod grid;
pub mod model;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
