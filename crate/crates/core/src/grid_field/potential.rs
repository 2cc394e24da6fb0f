use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Static external potential `V(q)`.
///
/// Shapes other than the harmonic well depend on the first coordinate only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Free,
    /// `m omega^2 |q|^2 / 2`
    Harmonic { omega: f64 },
    /// `b (x^2 - a^2)^2`
    DoubleWell { a: f64, b: f64 },
    /// `height` on `|x| < width / 2`, zero elsewhere.
    Barrier { height: f64, width: f64 },
    /// Values given directly on the grid.
    Table { values: Vec<f64> },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::Free
    }
}

impl PotentialSpec {
    pub fn evaluate(&self, grid: &Grid, mass: f64) -> Result<Vec<f64>> {
        let values: Vec<f64> = match self {
            Self::Table { values } => {
                if values.len() != grid.len() {
                    return Err(Error::InvalidInput(format!(
                        "potential table has {} entries, grid has {}",
                        values.len(),
                        grid.len()
                    )));
                }
                values.clone()
            }
            _ => (0..grid.len()).map(|i| self.at(grid.point(i), grid.dim(), mass)).collect(),
        };
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("potential is not finite at grid index {i}")));
        }
        Ok(values)
    }

    fn at(&self, p: [f64; 2], dim: usize, mass: f64) -> f64 {
        let x = p[0];
        match *self {
            Self::Free => 0.0,
            Self::Harmonic { omega } => {
                let r2: f64 = p[..dim].iter().map(|c| c * c).sum();
                0.5 * mass * omega * omega * r2
            }
            Self::DoubleWell { a, b } => b * (x * x - a * a).powi(2),
            Self::Barrier { height, width } => {
                if x.abs() < 0.5 * width {
                    height
                } else {
                    0.0
                }
            }
            Self::Table { .. } => unreachable!("tables are handled in evaluate"),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Self::Free)
    }
}
