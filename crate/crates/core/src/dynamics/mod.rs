//! Time evolution for any quantum-potential strength `lambda` in `[0, 1]`.
//!
//! Writing `psi = R e^{iS/hbar}`, the pair
//!
//! ```text
//! dS/dt + |grad S|^2 / 2m + V + lambda Q = 0,     Q = -(hbar^2 / 2m) lap R / R
//! d(R^2)/dt + div(R^2 grad S / m) = 0
//! ```
//!
//! is equivalent to the wave equation
//!
//! ```text
//! i hbar dpsi/dt = [ -(hbar^2 / 2m) lap + V + (lambda - 1) Q[|psi|] ] psi
//! ```
//!
//! since the linear Schrödinger operator already supplies one full `Q` in the
//! phase equation. The extra term is real, so the split-step propagator stays
//! norm preserving. At `lambda = 1` it vanishes; at `lambda = 0` the quantum
//! pressure is cancelled and the field carries a classical Hamilton-Jacobi
//! ensemble.

mod evolve;
mod ground;
mod sweep;

pub use evolve::{
    energy_expectation, evolve, lambda_energy, Diagnostics, EvolutionConfig, EvolutionTrace, SplitStepper,
};
pub(crate) use evolve::drive;
pub use ground::relax_ground_state;
pub use sweep::{interference_visibility, lambda_sweep, SweepEntry, SweepStatus};
