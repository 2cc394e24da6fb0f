//! Grids, complex fields, polar form, spatial derivatives and the quantum potential.

mod field;
mod grid;
pub mod io;
mod params;
mod potential;
mod spectral;

pub use field::{
    polar_compose, polar_decompose, quantum_potential, PolarField, QuantumPotential, Wavefunction, NODE_EPS_REL,
};
pub(crate) use field::quantum_potential_of_amplitude;
pub use grid::{make_grid, Axis, Grid};
pub use params::PhysicalParams;
pub use potential::PotentialSpec;
pub use spectral::{differentiate, differentiate_complex, Scheme, Spectral};
