use rayon::prelude::*;
use serde::Serialize;

use super::evolve::{evolve, EvolutionConfig, EvolutionTrace};
use crate::error::{Error, Result};
use crate::grid_field::Wavefunction;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    Truncated(String),
    Failed(String),
}

/// Outcome of one `lambda` in a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub lambda: f64,
    /// Interference visibility at the final time; `None` for a single packet
    /// or a run that did not reach the end.
    pub visibility: Option<f64>,
    #[serde(rename = "max_Q")]
    pub max_q: f64,
    pub status: SweepStatus,
    #[serde(skip)]
    pub max_q_history: Vec<(f64, f64)>,
    #[serde(skip)]
    pub final_density: Vec<f64>,
}

/// Fraction of the density carried by interference:
/// `int |rho - sum_c w_c rho_c| / int sum_c w_c rho_c`.
pub fn interference_visibility(total: &[f64], components: &[(f64, Vec<f64>)]) -> f64 {
    let mut incoherent = vec![0.0; total.len()];
    for (w, rho) in components {
        for (acc, r) in incoherent.iter_mut().zip(rho) {
            *acc += w * r;
        }
    }
    let num: f64 = total.iter().zip(&incoherent).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = incoherent.iter().sum();
    num / den
}

fn run_one(lambda: f64, total: &Wavefunction, parts: &[(f64, Wavefunction)], cfg: &EvolutionConfig) -> SweepEntry {
    let failed = |msg: String| SweepEntry {
        lambda,
        visibility: None,
        max_q: f64::NAN,
        status: SweepStatus::Failed(msg),
        max_q_history: Vec::new(),
        final_density: Vec::new(),
    };
    let cfg = match cfg.clone().with_lambda(lambda) {
        Ok(c) => c,
        Err(e) => return failed(e.to_string()),
    };
    let trace = match evolve(total, &cfg) {
        Ok(t) => t,
        Err(e) => return failed(e.to_string()),
    };
    let history: Vec<(f64, f64)> = trace.diagnostics.iter().map(|d| (d.t, d.max_q)).collect();
    let mut entry = SweepEntry {
        lambda,
        visibility: None,
        max_q: trace.max_q(),
        status: SweepStatus::Ok,
        max_q_history: history,
        final_density: trace.last().density(),
    };
    if let Some(reason) = &trace.truncated {
        entry.status = SweepStatus::Truncated(reason.clone());
        return entry;
    }
    if parts.len() < 2 {
        return entry;
    }
    let mut densities = Vec::with_capacity(parts.len());
    for (w, psi) in parts {
        match evolve(psi, &cfg) {
            Ok(EvolutionTrace { truncated: Some(reason), .. }) => {
                entry.status = SweepStatus::Truncated(format!("component: {reason}"));
                return entry;
            }
            Ok(tr) => densities.push((*w, tr.last().density())),
            Err(e) => {
                entry.status = SweepStatus::Failed(format!("component: {e}"));
                return entry;
            }
        }
    }
    entry.visibility = Some(interference_visibility(&entry.final_density, &densities));
    entry
}

/// Evolve the normalized superposition of `components` for every `lambda`
/// and report interference visibility and quantum-potential history.
///
/// Each component is also evolved on its own (the nonlinear equation is
/// homogeneous, so scaling commutes with the flow), which supplies the
/// no-interference reference for the visibility. Per-`lambda` failures are
/// recorded in the entry and do not stop the sweep.
pub fn lambda_sweep(components: &[Wavefunction], cfg: &EvolutionConfig, lambdas: &[f64]) -> Result<Vec<SweepEntry>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("lambda sweep needs at least one lambda".into()));
    }
    if lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::InvalidInput("every lambda must lie in [0, 1]".into()));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("lambdas must be sorted".into()));
    }
    let (first, rest) = components
        .split_first()
        .ok_or_else(|| Error::InvalidInput("lambda sweep needs an initial state".into()))?;
    let mut total = first.clone();
    for c in rest {
        if c.grid() != first.grid() {
            return Err(Error::InvalidInput("components live on different grids".into()));
        }
        total.values_mut().iter_mut().zip(c.values()).for_each(|(a, b)| *a += b);
    }
    let total_norm2 = total.norm_squared();
    let total = total.normalized()?;
    let parts: Vec<(f64, Wavefunction)> = if components.len() > 1 {
        components
            .iter()
            .map(|c| Ok((c.norm_squared() / total_norm2, c.clone().normalized()?)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(lambdas.par_iter().map(|&l| run_one(l, &total, &parts, cfg)).collect())
}
