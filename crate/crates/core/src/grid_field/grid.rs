use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One periodic axis: `n` points covering `[-length/2, length/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub length: f64,
}

impl Axis {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("axis length must be positive, got {length}")));
        }
        if n < 16 {
            return Err(Error::InvalidGrid(format!("need at least 16 points per axis, got {n}")));
        }
        if !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two for spectral derivatives, got {n}"
            )));
        }
        Ok(Self { n, length })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Angular wavenumbers in FFT order. The Nyquist entry is `-pi/dx`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * std::f64::consts::PI / self.length;
        (0..n).map(|j| if j < n / 2 { j } else { j - n } as f64 * dk).collect()
    }

    /// Map a coordinate into `[-L/2, L/2)`.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let half = 0.5 * self.length;
        let y = (x + half).rem_euclid(self.length) - half;
        // rem_euclid can round up to exactly `length`
        if y >= half {
            -half
        } else {
            y
        }
    }

    /// Cell index to the left of `x` and the fractional offset in `[0, 1)`.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (self.wrap(x) + 0.5 * self.length) / self.spacing();
        let j = s.floor();
        let frac = s - j;
        ((j as usize) % self.n, frac)
    }
}

/// Uniform periodic grid in one or two dimensions, stored row-major with the
/// last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

/// Build a grid with the same extent and resolution on every axis.
pub fn make_grid(dim: usize, length: f64, n: usize) -> Result<Grid> {
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
    }
    let axis = Axis::new(length, n)?;
    Ok(Grid { axes: vec![axis; dim] })
}

impl Grid {
    pub fn line(length: f64, n: usize) -> Result<Self> {
        make_grid(1, length, n)
    }

    pub fn plane(lengths: [f64; 2], ns: [usize; 2]) -> Result<Self> {
        Ok(Self {
            axes: vec![Axis::new(lengths[0], ns[0])?, Axis::new(lengths[1], ns[1])?],
        })
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Self> {
        if !(1..=2).contains(&axes.len()) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {}", axes.len())));
        }
        for a in &axes {
            Axis::new(a.length, a.n)?;
        }
        Ok(Self { axes })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `dx^dim`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Grid multi-index of a flat index.
    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx / self.axes[1].n, idx % self.axes[1].n],
        }
    }

    #[inline]
    pub fn ravel(&self, ij: [usize; 2]) -> usize {
        match self.dim() {
            1 => ij[0],
            _ => ij[0] * self.axes[1].n + ij[1],
        }
    }

    /// Coordinates of a flat index; the second entry is 0 on a line.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ij = self.unravel(idx);
        let mut p = [0.0; 2];
        for (k, a) in self.axes.iter().enumerate() {
            p[k] = a.coord(ij[k]);
        }
        p
    }

    pub fn wrap_point(&self, p: [f64; 2]) -> [f64; 2] {
        let mut q = p;
        for (k, a) in self.axes.iter().enumerate() {
            q[k] = a.wrap(p[k]);
        }
        q
    }

    /// Non-periodic lattice neighbours of a flat index.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let ij = self.unravel(idx);
        let dim = self.dim();
        (0..dim).flat_map(move |k| {
            let n = self.axes[k].n;
            let lo = (ij[k] > 0).then(|| {
                let mut m = ij;
                m[k] -= 1;
                self.ravel(m)
            });
            let hi = (ij[k] + 1 < n).then(|| {
                let mut m = ij;
                m[k] += 1;
                self.ravel(m)
            });
            lo.into_iter().chain(hi)
        })
    }

    /// For every point, the index of the nearest point with `valid[i] == true`
    /// (breadth-first in lattice steps). `None` when nothing is valid.
    pub fn nearest_valid(&self, valid: &[bool]) -> Option<Vec<usize>> {
        let mut source = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        for (i, &ok) in valid.iter().enumerate() {
            if ok {
                source[i] = i;
                queue.push_back(i);
            }
        }
        if queue.is_empty() {
            return None;
        }
        while let Some(i) = queue.pop_front() {
            let src = source[i];
            for j in self.neighbors(i) {
                if source[j] == usize::MAX {
                    source[j] = src;
                    queue.push_back(j);
                }
            }
        }
        Some(source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_layout() {
        let g = make_grid(1, 20.0, 256).unwrap();
        assert_eq!(g.axis(0).spacing(), 0.078125);
        assert_eq!(g.axis(0).coord(0), -10.0);
        assert!(g.axis(0).coord(255) < 10.0);

        let g2 = make_grid(2, 10.0, 64).unwrap();
        assert_eq!(g2.len(), 64 * 64);
        assert_eq!(g2.axis(1).spacing(), 0.15625);
        assert_eq!(g2.unravel(g2.ravel([3, 7])), [3, 7]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(make_grid(1, 20.0, 255).is_err());
        assert!(make_grid(1, 0.0, 256).is_err());
        assert!(make_grid(1, -1.0, 256).is_err());
        assert!(make_grid(1, 1.0, 8).is_err());
        assert!(make_grid(3, 1.0, 16).is_err());
    }

    #[test]
    fn wrap_stays_in_domain() {
        let a = Axis::new(4.0, 16).unwrap();
        for x in [-2.0, 2.0, 5.9, -7.3, 1e-17 - 2.0] {
            let y = a.wrap(x);
            assert!((-2.0..2.0).contains(&y), "{x} -> {y}");
        }
        assert_eq!(a.wrap(2.0), -2.0);
    }

    #[test]
    fn nearest_valid_fills_from_closest() {
        let g = Grid::line(16.0, 16).unwrap();
        let mut valid = vec![false; 16];
        valid[3] = true;
        valid[12] = true;
        let src = g.nearest_valid(&valid).unwrap();
        assert_eq!(src[0], 3);
        assert_eq!(src[7], 3);
        assert_eq!(src[9], 12);
        assert_eq!(src[15], 12);
    }
}
