//! Simulation laboratory for stochastic mechanics.
//!
//! * [`grid_field`]: periodic grids, wavefunctions, polar form and the quantum potential.
//! * [`dynamics`]: split-step evolution with a tunable quantum potential, `lambda` in `[0, 1]`.
//! * [`trajectories`]: Bohmian (deterministic) and Nelson (diffusive) particle paths.
//! * [`ensemble`]: sampling, binned densities, chi-square equilibrium tests, coarse-grained H.
//! * [`measurement`]: a von Neumann pointer coupled to a two-branch system.
//! * [`contextuality`]: empirical models, global sections, contextual fraction and CHSH.

pub mod contextuality;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod grid_field;
pub mod measurement;
pub mod trajectories;

pub use error::{AbortDiagnostic, Error, Result};
pub use num_complex::Complex64 as C64;
