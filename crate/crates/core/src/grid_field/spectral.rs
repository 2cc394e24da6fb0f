use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Finite-difference or Fourier evaluation of spatial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Spectral,
    CentralFd2,
}

/// FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    backward: Vec<Arc<dyn Fft<f64>>>,
    k: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.axes().iter().map(|a| planner.plan_fft_forward(a.n)).collect();
        let backward = grid.axes().iter().map(|a| planner.plan_fft_inverse(a.n)).collect();
        let k = grid.axes().iter().map(|a| a.wavenumbers()).collect();
        Self { grid: grid.clone(), forward, backward, k }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.k[axis]
    }

    /// Unnormalized transform along one axis, in place.
    fn transform_axis(&self, data: &mut [C64], axis: usize, inverse: bool) {
        let plan = if inverse { &self.backward[axis] } else { &self.forward[axis] };
        if self.grid.dim() == 1 || axis == 1 {
            plan.process(data);
            return;
        }
        let (nx, ny) = (self.grid.axis(0).n, self.grid.axis(1).n);
        let mut cols = vec![C64::new(0.0, 0.0); nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                cols[j * nx + i] = data[i * ny + j];
            }
        }
        plan.process(&mut cols);
        for i in 0..nx {
            for j in 0..ny {
                data[i * ny + j] = cols[j * nx + i];
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        for axis in 0..self.grid.dim() {
            self.transform_axis(data, axis, false);
        }
    }

    /// Inverse transform over all axes, including the `1/N` factor.
    pub fn inverse(&self, data: &mut [C64]) {
        for axis in 0..self.grid.dim() {
            self.transform_axis(data, axis, true);
        }
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Transform along `axis`, multiply each mode by `mult(k, flat_index)`,
    /// transform back.
    pub fn apply_axis(&self, data: &mut [C64], axis: usize, mult: impl Fn(f64, usize) -> C64) {
        self.transform_axis(data, axis, false);
        let n = self.grid.axis(axis).n;
        let scale = 1.0 / n as f64;
        for (idx, z) in data.iter_mut().enumerate() {
            let kj = self.grid.unravel(idx)[axis];
            *z *= mult(self.k[axis][kj], idx) * scale;
        }
        self.transform_axis(data, axis, true);
    }

    /// `|k|^2` for every mode of the full transform, same layout as the data.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|idx| {
                let m = self.grid.unravel(idx);
                (0..self.grid.dim()).map(|a| self.k[a][m[a]].powi(2)).sum()
            })
            .collect()
    }

    pub fn derivative(&self, data: &[C64], axis: usize, order: usize) -> Result<Vec<C64>> {
        check_order(order)?;
        check_axis(&self.grid, axis)?;
        let nyquist = self.grid.axis(axis).n / 2;
        let mut out = data.to_vec();
        let grid = &self.grid;
        self.apply_axis(&mut out, axis, |k, idx| {
            if order == 1 {
                // odd derivative of the unpaired Nyquist mode is not representable
                if grid.unravel(idx)[axis] == nyquist {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, k)
                }
            } else {
                C64::new(-k * k, 0.0)
            }
        });
        Ok(out)
    }

    pub fn derivative_real(&self, data: &[f64], axis: usize, order: usize) -> Result<Vec<f64>> {
        let z: Vec<C64> = data.iter().map(|&x| C64::new(x, 0.0)).collect();
        Ok(self.derivative(&z, axis, order)?.into_iter().map(|z| z.re).collect())
    }

    pub fn laplacian(&self, data: &[C64]) -> Vec<C64> {
        let mut out = data.to_vec();
        self.forward(&mut out);
        for (z, k2) in out.iter_mut().zip(self.k_squared()) {
            *z *= -k2;
        }
        self.inverse(&mut out);
        out
    }

    pub fn laplacian_real(&self, data: &[f64]) -> Vec<f64> {
        let z: Vec<C64> = data.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.laplacian(&z).into_iter().map(|z| z.re).collect()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(())
}

fn check_axis(grid: &Grid, axis: usize) -> Result<()> {
    if axis >= grid.dim() {
        return Err(Error::InvalidInput(format!("axis {axis} out of range for a {}-d grid", grid.dim())));
    }
    Ok(())
}

/// Periodic second-order central differences.
fn central_fd2(grid: &Grid, data: &[C64], axis: usize, order: usize) -> Vec<C64> {
    let n = grid.axis(axis).n;
    let dx = grid.axis(axis).spacing();
    (0..data.len())
        .map(|idx| {
            let m = grid.unravel(idx);
            let mut lo = m;
            let mut hi = m;
            lo[axis] = (m[axis] + n - 1) % n;
            hi[axis] = (m[axis] + 1) % n;
            let (fl, fh) = (data[grid.ravel(lo)], data[grid.ravel(hi)]);
            if order == 1 {
                (fh - fl) / (2.0 * dx)
            } else {
                (fh - 2.0 * data[idx] + fl) / (dx * dx)
            }
        })
        .collect()
}

/// Derivative of a complex field along `axis`.
pub fn differentiate_complex(
    grid: &Grid,
    field: &[C64],
    axis: usize,
    order: usize,
    scheme: Scheme,
) -> Result<Vec<C64>> {
    check_order(order)?;
    check_axis(grid, axis)?;
    if field.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "field has {} values, grid has {}",
            field.len(),
            grid.len()
        )));
    }
    match scheme {
        Scheme::Spectral => Spectral::new(grid).derivative(field, axis, order),
        Scheme::CentralFd2 => Ok(central_fd2(grid, field, axis, order)),
    }
}

/// Derivative of a real field along `axis`.
pub fn differentiate(grid: &Grid, field: &[f64], axis: usize, order: usize, scheme: Scheme) -> Result<Vec<f64>> {
    let z: Vec<C64> = field.iter().map(|&x| C64::new(x, 0.0)).collect();
    Ok(differentiate_complex(grid, &z, axis, order, scheme)?
        .into_iter()
        .map(|z| z.re)
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid_field::grid::make_grid;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn sine_derivative_is_exact() {
        let g = Grid::line(20.0, 256).unwrap();
        let l = 20.0;
        let x = g.axis(0).coords();
        let f: Vec<f64> = x.iter().map(|&x| (2.0 * PI * x / l).sin()).collect();
        let want: Vec<f64> = x.iter().map(|&x| 2.0 * PI / l * (2.0 * PI * x / l).cos()).collect();
        let d = differentiate(&g, &f, 0, 1, Scheme::Spectral).unwrap();
        assert!(max_err(&d, &want) < 1e-10);
    }

    #[test]
    fn plane_wave_second_derivative() {
        let g = Grid::line(20.0, 128).unwrap();
        let k = 2.0 * PI * 3.0 / 20.0;
        let psi: Vec<C64> = g.axis(0).coords().iter().map(|&x| C64::from_polar(1.0, k * x)).collect();
        let d = differentiate_complex(&g, &psi, 0, 2, Scheme::Spectral).unwrap();
        for (a, b) in d.iter().zip(&psi) {
            assert!((a + k * k * b).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = make_grid(2, 10.0, 32).unwrap();
        let f = vec![3.7; g.len()];
        for axis in 0..2 {
            for order in 1..=2 {
                let d = differentiate(&g, &f, axis, order, Scheme::Spectral).unwrap();
                assert!(d.iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn rejects_high_order() {
        let g = Grid::line(10.0, 32).unwrap();
        let f = vec![0.0; 32];
        assert!(matches!(differentiate(&g, &f, 0, 3, Scheme::Spectral), Err(Error::UnsupportedOrder(3))));
        assert!(differentiate(&g, &f, 0, 0, Scheme::CentralFd2).is_err());
        assert!(differentiate(&g, &f, 1, 1, Scheme::CentralFd2).is_err());
    }

    #[test]
    fn fd2_converges_to_spectral_at_second_order() {
        // Richardson-style check: halving dx should cut the FD error by ~4.
        let errs: Vec<f64> = [128usize, 256, 512]
            .iter()
            .map(|&n| {
                let g = Grid::line(20.0, n).unwrap();
                let f: Vec<f64> = g.axis(0).coords().iter().map(|&x| (-x * x / 2.0).exp()).collect();
                let s = differentiate(&g, &f, 0, 2, Scheme::Spectral).unwrap();
                let fd = differentiate(&g, &f, 0, 2, Scheme::CentralFd2).unwrap();
                max_err(&s, &fd)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.8..4.2).contains(&ratio), "ratio {ratio}, errs {errs:?}");
        }
    }

    #[test]
    fn two_dimensional_axes_are_independent() {
        let g = Grid::plane([8.0, 16.0], [32, 64]).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                (2.0 * PI * p[0] / 8.0).sin() * (2.0 * PI * 2.0 * p[1] / 16.0).cos()
            })
            .collect();
        let dy = differentiate(&g, &f, 1, 1, Scheme::Spectral).unwrap();
        for i in 0..g.len() {
            let p = g.point(i);
            let want = -(2.0 * PI * 2.0 / 16.0) * (2.0 * PI * p[0] / 8.0).sin() * (2.0 * PI * 2.0 * p[1] / 16.0).sin();
            assert!((dy[i] - want).abs() < 1e-10);
        }
    }
}
