use num_complex::Complex64 as C64;

use super::{Guidance, Interpolation, Point};
use crate::dynamics::EvolutionTrace;
use crate::error::{Error, Result};
use crate::grid_field::{Grid, Spectral, Wavefunction, NODE_EPS_REL};

/// A vector evaluated at a particle position; `flagged` marks a node fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample {
    pub value: Point,
    pub flagged: bool,
}

struct Frame {
    t: f64,
    psi: Vec<C64>,
    grad: Vec<Vec<C64>>,
    /// Fourier coefficients, kept only for spectral evaluation.
    hat: Option<Vec<C64>>,
    /// Nearest valid point for every point; `None` when there are no nodes.
    nearest: Option<Vec<usize>>,
    eps: f64,
}

impl Frame {
    fn new(spectral: &Spectral, psi: &Wavefunction, keep_hat: bool) -> Result<Self> {
        let grid = psi.grid();
        let values = psi.values().to_vec();
        let grad = (0..grid.dim())
            .map(|a| spectral.derivative(&values, a, 1))
            .collect::<Result<Vec<_>>>()?;
        let rmax = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(rmax > 0.0) {
            return Err(Error::InvalidInput("frame is identically zero".into()));
        }
        let eps = NODE_EPS_REL * rmax;
        let valid: Vec<bool> = values.iter().map(|z| z.norm() >= eps).collect();
        let nearest = if valid.iter().all(|&v| v) { None } else { grid.nearest_valid(&valid) };
        let hat = keep_hat.then(|| {
            let mut h = values.clone();
            spectral.forward(&mut h);
            h
        });
        Ok(Self { t: psi.t(), psi: values, grad, hat, nearest, eps })
    }
}

/// Time-ordered wavefunction frames with precomputed gradients, evaluated
/// at arbitrary positions and times. Between frames `psi` and `grad psi` are
/// blended linearly in `(Re, Im)`.
pub struct FrameSeries {
    grid: Grid,
    frames: Vec<Frame>,
    interpolation: Interpolation,
    /// Per-axis wavenumbers, used by spectral evaluation.
    k: Vec<Vec<f64>>,
}

impl FrameSeries {
    pub fn from_trace(trace: &EvolutionTrace, interpolation: Interpolation) -> Result<Self> {
        Self::from_frames(&trace.snapshots, interpolation)
    }

    pub fn single(psi: &Wavefunction, interpolation: Interpolation) -> Result<Self> {
        Self::from_frames(std::slice::from_ref(psi), interpolation)
    }

    pub fn from_frames(frames: &[Wavefunction], interpolation: Interpolation) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::InvalidInput("no frames".into()))?;
        let grid = first.grid().clone();
        if frames.iter().any(|f| f.grid() != &grid) {
            return Err(Error::InvalidInput("frames live on different grids".into()));
        }
        if frames.windows(2).any(|w| !(w[1].t() > w[0].t())) {
            return Err(Error::InvalidInput("frame times must increase".into()));
        }
        let spectral = Spectral::new(&grid);
        let keep_hat = interpolation == Interpolation::SpectralEval;
        let frames = frames
            .iter()
            .map(|f| Frame::new(&spectral, f, keep_hat))
            .collect::<Result<Vec<_>>>()?;
        let k = (0..grid.dim()).map(|a| grid.axis(a).wavenumbers()).collect();
        Ok(Self { grid, frames, interpolation, k })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Bracketing frames and blend weight of the later one.
    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.frames.len();
        if n == 1 || t <= self.frames[0].t {
            return (0, 0, 0.0);
        }
        if t >= self.frames[n - 1].t {
            return (n - 1, n - 1, 0.0);
        }
        let hi = self.frames.partition_point(|f| f.t <= t);
        let (a, b) = (&self.frames[hi - 1], &self.frames[hi]);
        (hi - 1, hi, (t - a.t) / (b.t - a.t))
    }

    /// `grad psi / psi` at grid point `j`, with the node fallback.
    fn log_derivative_at(&self, ia: usize, ib: usize, alpha: f64, j: usize) -> ([C64; 2], bool) {
        let (a, b) = (&self.frames[ia], &self.frames[ib]);
        let blend = |j: usize| {
            let psi = a.psi[j] * (1.0 - alpha) + b.psi[j] * alpha;
            let mut g = [C64::new(0.0, 0.0); 2];
            for (ax, gx) in g.iter_mut().enumerate().take(self.grid.dim()) {
                *gx = a.grad[ax][j] * (1.0 - alpha) + b.grad[ax][j] * alpha;
            }
            (psi, g)
        };
        let eps = a.eps * (1.0 - alpha) + b.eps * alpha;
        let (psi, g) = blend(j);
        if psi.norm() >= eps {
            return ([g[0] / psi, g[1] / psi], false);
        }
        let (near, far) = if alpha < 0.5 { (a, b) } else { (b, a) };
        for f in [near, far] {
            if let Some(src) = &f.nearest {
                let s = src[j];
                if s != j {
                    let (psi, g) = blend(s);
                    if psi.norm() >= eps {
                        return ([g[0] / psi, g[1] / psi], true);
                    }
                }
            }
        }
        ([C64::new(0.0, 0.0); 2], true)
    }

    fn log_derivative_linear(&self, t: f64, x: Point) -> ([C64; 2], bool) {
        let (ia, ib, alpha) = self.bracket(t);
        let mut w = [C64::new(0.0, 0.0); 2];
        let mut flagged = false;
        let mut add = |j: usize, weight: f64| {
            if weight == 0.0 {
                return;
            }
            let (d, f) = self.log_derivative_at(ia, ib, alpha, j);
            flagged |= f;
            w[0] += d[0] * weight;
            w[1] += d[1] * weight;
        };
        let ax = self.grid.axis(0);
        let (i0, fx) = ax.locate(x[0]);
        let i1 = (i0 + 1) % ax.n;
        if self.grid.dim() == 1 {
            add(i0, 1.0 - fx);
            add(i1, fx);
        } else {
            let ay = self.grid.axis(1);
            let (j0, fy) = ay.locate(x[1]);
            let j1 = (j0 + 1) % ay.n;
            add(self.grid.ravel([i0, j0]), (1.0 - fx) * (1.0 - fy));
            add(self.grid.ravel([i0, j1]), (1.0 - fx) * fy);
            add(self.grid.ravel([i1, j0]), fx * (1.0 - fy));
            add(self.grid.ravel([i1, j1]), fx * fy);
        }
        (w, flagged)
    }

    fn log_derivative_spectral(&self, t: f64, x: Point) -> ([C64; 2], bool) {
        let (ia, ib, alpha) = self.bracket(t);
        let (a, b) = (&self.frames[ia], &self.frames[ib]);
        let (ha, hb) = (a.hat.as_ref(), b.hat.as_ref());
        let (Some(ha), Some(hb)) = (ha, hb) else {
            return self.log_derivative_linear(t, x);
        };
        let dim = self.grid.dim();
        // per-axis phase factors; the Nyquist mode enters as a cosine and has no derivative
        let mut phase: Vec<Vec<C64>> = Vec::with_capacity(dim);
        for ax in 0..dim {
            let axis = self.grid.axis(ax);
            let s = x[ax] - axis.coord(0);
            phase.push(
                self.k[ax]
                    .iter()
                    .enumerate()
                    .map(|(m, &k)| {
                        if m == axis.n / 2 {
                            C64::new((k * s).cos(), 0.0)
                        } else {
                            C64::from_polar(1.0, k * s)
                        }
                    })
                    .collect(),
            );
        }
        let mut psi = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for idx in 0..self.grid.len() {
            let c = ha[idx] * (1.0 - alpha) + hb[idx] * alpha;
            let m = self.grid.unravel(idx);
            let mut e = C64::new(1.0, 0.0);
            for ax in 0..dim {
                e *= phase[ax][m[ax]];
            }
            let ce = c * e;
            psi += ce;
            for (ax, gx) in g.iter_mut().enumerate().take(dim) {
                if m[ax] != self.grid.axis(ax).n / 2 {
                    *gx += ce * C64::new(0.0, self.k[ax][m[ax]]);
                }
            }
        }
        let n = self.grid.len() as f64;
        psi /= n;
        let eps = a.eps * (1.0 - alpha) + b.eps * alpha;
        if psi.norm() < eps {
            return self.log_derivative_linear(t, x);
        }
        ([g[0] / n / psi, g[1] / n / psi], false)
    }

    fn log_derivative(&self, t: f64, x: Point) -> ([C64; 2], bool) {
        match self.interpolation {
            Interpolation::Linear => self.log_derivative_linear(t, x),
            Interpolation::SpectralEval => self.log_derivative_spectral(t, x),
        }
    }

    /// Bohmian velocity `(hbar/m) Im(grad psi / psi)` plus any active coupling.
    pub fn velocity(&self, t: f64, x: Point, guidance: &Guidance) -> FrameSample {
        self.velocity_in_step(t, t, x, guidance)
    }

    /// As [`Self::velocity`], with the coupling switched by the start of the
    /// integration step so that a step never straddles the window edge.
    pub(crate) fn velocity_in_step(&self, t: f64, t_step: f64, x: Point, guidance: &Guidance) -> FrameSample {
        let x = self.grid.wrap_point(x);
        let (w, flagged) = self.log_derivative(t, x);
        let mut value = [0.0; 2];
        for (a, v) in value.iter_mut().enumerate().take(self.grid.dim()) {
            *v = guidance.hbar / guidance.masses[a] * w[a].im;
        }
        add_coupling(&mut value, t_step, x, guidance);
        FrameSample { value, flagged }
    }

    /// Osmotic velocity `(hbar/m) Re(grad psi / psi)`.
    pub fn osmotic(&self, t: f64, x: Point, guidance: &Guidance) -> FrameSample {
        let x = self.grid.wrap_point(x);
        let (w, flagged) = self.log_derivative(t, x);
        let mut value = [0.0; 2];
        for (a, v) in value.iter_mut().enumerate().take(self.grid.dim()) {
            *v = guidance.hbar / guidance.masses[a] * w[a].re;
        }
        FrameSample { value, flagged }
    }

    /// Nelson forward drift: velocity plus osmotic velocity.
    pub fn drift(&self, t: f64, x: Point, guidance: &Guidance) -> FrameSample {
        let x = self.grid.wrap_point(x);
        let (w, flagged) = self.log_derivative(t, x);
        let mut value = [0.0; 2];
        for (a, v) in value.iter_mut().enumerate().take(self.grid.dim()) {
            *v = guidance.hbar / guidance.masses[a] * (w[a].im + w[a].re);
        }
        add_coupling(&mut value, t, x, guidance);
        FrameSample { value, flagged }
    }
}

fn add_coupling(value: &mut Point, t: f64, x: Point, guidance: &Guidance) {
    if let Some(c) = &guidance.coupling {
        if c.active(t) {
            value[c.target_axis] += c.strength * x[c.source_axis];
        }
    }
}

/// Current and osmotic velocities of one frame on its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid,
    /// `grad S / m`, one array per axis.
    pub v: Vec<Vec<f64>>,
    /// `(hbar / 2m) grad rho / rho`, one array per axis.
    pub u: Vec<Vec<f64>>,
    /// `false` at nodes, where `v` and `u` hold the nearest valid values.
    pub valid_mask: Vec<bool>,
}

impl VelocityField {
    pub fn new(psi: &Wavefunction, guidance: &Guidance) -> Result<Self> {
        let grid = psi.grid().clone();
        if guidance.masses.len() != grid.dim() {
            return Err(Error::InvalidInput("need one mass per axis".into()));
        }
        let series = FrameSeries::single(psi, Interpolation::Linear)?;
        let dim = grid.dim();
        let mut v = vec![vec![0.0; grid.len()]; dim];
        let mut u = vec![vec![0.0; grid.len()]; dim];
        let mut valid_mask = vec![true; grid.len()];
        for j in 0..grid.len() {
            let (w, flagged) = series.log_derivative_at(0, 0, 0.0, j);
            valid_mask[j] = !flagged;
            for a in 0..dim {
                let c = guidance.hbar / guidance.masses[a];
                v[a][j] = c * w[a].im;
                u[a][j] = c * w[a].re;
            }
        }
        Ok(Self { grid, v, u, valid_mask })
    }
}

/// Bohmian velocity of a single frame at `x`.
pub fn bohm_velocity(psi: &Wavefunction, x: Point, guidance: &Guidance) -> Result<FrameSample> {
    Ok(FrameSeries::single(psi, Interpolation::Linear)?.velocity(psi.t(), x, guidance))
}

/// Nelson forward drift of a single frame at `x`.
pub fn nelson_drift(psi: &Wavefunction, x: Point, guidance: &Guidance) -> Result<FrameSample> {
    Ok(FrameSeries::single(psi, Interpolation::Linear)?.drift(psi.t(), x, guidance))
}
