//! Crank-Nicolson reference propagator, coded independently of the
//! split-step solver (dense matrices, no FFT).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use sllab_core::C64;

/// Dense Fourier-collocation second derivative built from the DFT sums
/// `D[j][l] = (1/n) sum_k -k^2 exp(i k (x_j - x_l))`.
pub fn spectral_second_derivative(n: usize, length: f64) -> DMatrix<C64> {
    let dk = 2.0 * PI / length;
    let dx = length / n as f64;
    DMatrix::from_fn(n, n, |j, l| {
        let d = (j as f64 - l as f64) * dx;
        let mut acc = C64::new(0.0, 0.0);
        for m in 0..n {
            let m = m as i64;
            let k = if m < n as i64 / 2 { m } else { m - n as i64 } as f64 * dk;
            acc += C64::from_polar(-k * k, k * d);
        }
        acc / n as f64
    })
}

/// `steps` Crank-Nicolson steps with `m = hbar = 1`.
pub fn crank_nicolson(psi0: &[f64], im0: &[f64], v: &[f64], length: f64, dt: f64, steps: usize) -> Vec<C64> {
    let n = psi0.len();
    let (m, hbar) = (1.0, 1.0);
    let mut h = spectral_second_derivative(n, length) * C64::new(-hbar * hbar / (2.0 * m), 0.0);
    for (i, vi) in v.iter().enumerate() {
        h[(i, i)] += vi;
    }
    let id = DMatrix::<C64>::identity(n, n);
    let half = C64::new(0.0, 0.5 * dt / hbar);
    let lhs = &id + &h * half;
    let rhs = &id - &h * half;
    let lu = lhs.lu();
    let mut psi = DVector::from_fn(n, |i, _| C64::new(psi0[i], im0[i]));
    for _ in 0..steps {
        psi = lu.solve(&(&rhs * &psi)).expect("Crank-Nicolson matrix is invertible");
    }
    psi.iter().copied().collect()
}
