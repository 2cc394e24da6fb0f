//! One module per experiment. Each writes its artifacts and returns a
//! [`Summary`] holding metrics, built-in checks and soft warnings.

mod contextuality;
mod ensembles;
mod measurement;
mod waves;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::{CliError, CliResult};
use crate::output::Artifacts;
use crate::plot::PlotError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Deterministic result of a run; written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    /// Which part of the theory the run exercises.
    pub topic: String,
    pub seed: Option<u64>,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Human-readable headline lines.
    pub lines: Vec<String>,
}

impl Summary {
    fn new(experiment: &str, topic: &str, seed: Option<u64>) -> Self {
        Self {
            experiment: experiment.into(),
            topic: topic.into(),
            seed,
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            lines: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, value: impl Serialize) {
        self.metrics.insert(key.into(), serde_json::to_value(value).expect("metric serializes"));
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.into(), pass, detail });
    }

    fn line(&mut self, text: String) {
        self.lines.push(text);
    }

    fn warn(&mut self, text: String) {
        self.warnings.push(text);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Failed checks, plus warnings when `strict`.
    pub fn failures(&self, strict: bool) -> Vec<String> {
        let mut out: Vec<String> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
        if strict {
            out.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        }
        out
    }

    /// One-screen text report.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {} [{}]", self.experiment, self.topic);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed: {seed}");
        }
        for l in &self.lines {
            let _ = writeln!(s, "  {l}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "  {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        let _ = writeln!(s, "status: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

impl From<PlotError> for CliError {
    fn from(e: PlotError) -> Self {
        CliError::Assertion(vec![format!("plot: {e}")])
    }
}

/// Number of steps of size `dt` covering `t`; `dt` must divide `t`.
fn steps_for(t: f64, dt: f64) -> CliResult<usize> {
    if !(t > 0.0 && dt > 0.0) || !t.is_finite() || !dt.is_finite() {
        return Err(CliError::Config(format!("t and dt must be positive, got t = {t}, dt = {dt}")));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t || steps < 1.0 {
        return Err(CliError::Config(format!("dt = {dt} does not divide t = {t}")));
    }
    Ok(steps as usize)
}

/// CSV text with a header row; values use the shortest round-trip format.
fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Round for display without losing the `1.0` style of whole numbers.
fn round9(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

pub fn execute(experiment: &Experiment, seed: Option<u64>, art: &mut Artifacts) -> CliResult<Summary> {
    match experiment {
        Experiment::FreePacket(p) => waves::free_packet(p, art),
        Experiment::EigenstateHold(p) => waves::eigenstate_hold(p, art),
        Experiment::LambdaSweep(p) => waves::lambda_sweep(p, art),
        Experiment::Equivariance(p) => ensembles::equivariance(p, seed.unwrap_or(0), art),
        Experiment::NelsonBorn(p) => ensembles::nelson_born(p, seed.unwrap_or(0), art),
        Experiment::Relaxation(p) => ensembles::relaxation(p, seed.unwrap_or(0), art),
        Experiment::Measurement(p) => measurement::run(p, seed.unwrap_or(0), art),
        Experiment::Contextuality(p) => contextuality::run(p, art),
    }
}

/// Cheap checks that a run would start: grids, initial states, step counts.
pub fn validate(experiment: &Experiment) -> CliResult<()> {
    match experiment {
        Experiment::FreePacket(p) => waves::free_packet_setup(p).map(|_| ()),
        Experiment::EigenstateHold(p) => waves::eigenstate_setup(p).map(|_| ()),
        Experiment::LambdaSweep(p) => waves::sweep_setup(p).map(|_| ()),
        Experiment::Equivariance(p) => ensembles::equivariance_setup(p).map(|_| ()),
        Experiment::NelsonBorn(p) => ensembles::nelson_setup(p).map(|_| ()),
        Experiment::Relaxation(p) => ensembles::relaxation_setup(p).map(|_| ()),
        Experiment::Measurement(p) => measurement::setup(p),
        Experiment::Contextuality(p) => contextuality::load_models(p).map(|_| ()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_counts() {
        assert_eq!(steps_for(2.0, 1e-3).unwrap(), 2000);
        assert!(steps_for(1.0, 0.3).is_err());
        assert!(steps_for(-1.0, 0.1).is_err());
    }

    #[test]
    fn csv_layout() {
        assert_eq!(csv("a,b", vec![vec![1.0, 0.5]]), "a,b\n1,0.5\n");
    }
}
