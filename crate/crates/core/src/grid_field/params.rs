use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass, action scale, diffusion scale and quantum-potential strength.
///
/// Two relations tie these together: `hbar = m * sigma` for a fully quantum
/// particle, and `lambda = m * sigma / hbar` (or a monotone function of it)
/// for partially quantum dynamics. With `sigma` read literally as the square
/// root of the diffusion coefficient the first relation is off by a factor of
/// two from the diffusion constant that makes `|psi|^2` stationary,
/// `nu = hbar / (2m)`. We keep `sigma = hbar / m` as the bookkeeping variable
/// and use [`PhysicalParams::nelson_diffusion`] wherever an actual diffusion
/// constant is needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub mass: f64,
    pub hbar: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::quantum(1.0, 1.0).expect("unit parameters are valid")
    }
}

impl PhysicalParams {
    /// Fully quantum particle: `sigma = hbar / m`, `lambda = 1`.
    pub fn quantum(mass: f64, hbar: f64) -> Result<Self> {
        Self::new(mass, hbar, hbar / mass, 1.0)
    }

    /// General constructor; only range invariants are checked.
    pub fn new(mass: f64, hbar: f64, sigma: f64, lambda: f64) -> Result<Self> {
        let p = Self { mass, hbar, sigma, lambda };
        p.validate()?;
        Ok(p)
    }

    /// Quantum-potential strength from the diffusion scale, `lambda = m sigma / hbar`.
    pub fn from_diffusion(mass: f64, hbar: f64, sigma: f64) -> Result<Self> {
        Self::from_diffusion_with(mass, hbar, sigma, |r| r)
    }

    /// As [`Self::from_diffusion`] but with `lambda = f(m sigma / hbar)` for a
    /// monotone map `f` onto `[0, 1]`.
    pub fn from_diffusion_with(mass: f64, hbar: f64, sigma: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(mass > 0.0 && hbar > 0.0) {
            return Err(Error::InvalidParams("mass and hbar must be positive".into()));
        }
        Self::new(mass, hbar, sigma, f(mass * sigma / hbar))
    }

    /// Same mass and action scale, quantum potential scaled by `lambda`.
    /// The diffusion scale follows the identity map, `sigma = lambda hbar / m`.
    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(self.mass, self.hbar, lambda * self.hbar / self.mass, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mass, self.hbar, self.sigma, self.lambda].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidParams(format!("mass must be positive, got {}", self.mass)));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidParams(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParams(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }

    /// `hbar == m sigma` within relative `tol`.
    pub fn is_fully_quantum(&self, tol: f64) -> bool {
        (self.hbar - self.mass * self.sigma).abs() <= tol * self.hbar && (self.lambda - 1.0).abs() <= tol
    }

    /// Diffusion constant of the Nelson process, `hbar / (2m)`.
    pub fn nelson_diffusion(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantum_mode_satisfies_both_relations() {
        let p = PhysicalParams::quantum(2.0, 1.5).unwrap();
        assert!(p.is_fully_quantum(1e-15));
        assert_eq!(p.lambda, p.mass * p.sigma / p.hbar);
        assert_eq!(p.nelson_diffusion(), 0.375);
    }

    #[test]
    fn lambda_tracks_diffusion() {
        let p = PhysicalParams::from_diffusion(1.0, 1.0, 0.25).unwrap();
        assert_eq!(p.lambda, 0.25);
        let q = PhysicalParams::from_diffusion_with(1.0, 1.0, 0.25, f64::sqrt).unwrap();
        assert_eq!(q.lambda, 0.5);
        assert!(PhysicalParams::from_diffusion(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, -0.1, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, 1.2).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }
}
