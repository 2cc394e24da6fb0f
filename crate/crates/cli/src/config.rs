//! Experiment configuration files.
//!
//! ```json
//! { "experiment": "free_packet", "seed": 7, "output": "runs/free", "params": { "n": 512 } }
//! ```
//!
//! Every `params` field has a default; unknown keys are rejected at both levels.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sllab_core::contextuality::fixtures;
use sllab_core::measurement::PointerModel;
use sllab_core::trajectories::TrajectoryKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    params: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreePacket {
    pub n: usize,
    pub length: f64,
    pub t: f64,
    pub dt: f64,
    /// Initial density standard deviation.
    pub width: f64,
    pub center: f64,
    pub k0: f64,
    pub mass: f64,
    pub hbar: f64,
    pub lambda: f64,
    pub snapshot_stride: usize,
}

impl Default for FreePacket {
    fn default() -> Self {
        Self {
            n: 512,
            length: 40.0,
            t: 2.0,
            dt: 1e-3,
            width: 1.0,
            center: 0.0,
            k0: 0.0,
            mass: 1.0,
            hbar: 1.0,
            lambda: 1.0,
            snapshot_stride: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenstateHold {
    pub n: usize,
    pub length: f64,
    pub omega: f64,
    pub mass: f64,
    pub hbar: f64,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
}

impl Default for EigenstateHold {
    fn default() -> Self {
        Self { n: 256, length: 20.0, omega: 1.0, mass: 1.0, hbar: 1.0, dt: 1e-3, steps: 1000, snapshot_stride: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaSweep {
    pub lambdas: Vec<f64>,
    /// Packet centres; the packets are superposed with equal weight.
    pub centers: Vec<f64>,
    pub width: f64,
    pub n: usize,
    pub length: f64,
    pub t: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for LambdaSweep {
    fn default() -> Self {
        Self {
            lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            centers: vec![-4.0, 4.0],
            width: 0.5,
            n: 512,
            length: 40.0,
            t: 3.0,
            dt: 1e-3,
            snapshot_stride: 100,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Equivariance {
    pub n: usize,
    pub length: f64,
    pub width: f64,
    pub k0: f64,
    pub t: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub particle_dt: f64,
    pub particles: usize,
    pub bins: usize,
    /// Number of seeds, starting at the run seed.
    pub seeds: u64,
    /// Trajectories written to CSV and drawn in the plot.
    pub saved_paths: usize,
}

impl Default for Equivariance {
    fn default() -> Self {
        Self {
            n: 512,
            length: 40.0,
            width: 1.0,
            k0: 0.0,
            t: 2.0,
            dt: 1e-3,
            snapshot_stride: 10,
            particle_dt: 1e-2,
            particles: 10_000,
            bins: 50,
            seeds: 20,
            saved_paths: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelsonBorn {
    pub n: usize,
    pub length: f64,
    pub omega: f64,
    pub t: f64,
    pub dt: f64,
    pub particles: usize,
    pub bins: usize,
    /// Common starting point; `null` samples the start from `|psi|^2`.
    pub start_x: Option<f64>,
    pub record_stride: usize,
    pub saved_paths: usize,
}

impl Default for NelsonBorn {
    fn default() -> Self {
        Self {
            n: 256,
            length: 20.0,
            omega: 1.0,
            t: 20.0,
            dt: 5e-3,
            particles: 10_000,
            bins: 50,
            start_x: Some(2.0),
            record_stride: 100,
            saved_paths: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Relaxation {
    pub n: usize,
    pub length: f64,
    pub omega: f64,
    pub t: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub particle_dt: f64,
    pub particles: usize,
    pub coarse_bins: usize,
    pub kind: TrajectoryKind,
    pub record_stride: usize,
}

impl Default for Relaxation {
    fn default() -> Self {
        Self {
            n: 128,
            length: 12.0,
            omega: 1.0,
            t: 5.0,
            dt: 2e-3,
            snapshot_stride: 25,
            particle_dt: 1e-2,
            particles: 2000,
            coarse_bins: 20,
            kind: TrajectoryKind::Nelson,
            record_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Measurement {
    pub model: PointerModel,
    pub particles: usize,
    pub kinds: Vec<TrajectoryKind>,
    pub saved_paths: usize,
}

impl Default for Measurement {
    fn default() -> Self {
        let model = PointerModel { branch_probabilities: vec![0.8, 0.2], ..PointerModel::default() };
        Self { model, particles: 10_000, kinds: vec![TrajectoryKind::Bohmian, TrajectoryKind::Nelson], saved_paths: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Contextuality {
    /// Fixture names, or paths to model JSON files (anything ending in `.json`).
    pub models: Vec<String>,
}

impl Default for Contextuality {
    fn default() -> Self {
        Self { models: fixtures::NAMES.iter().map(|s| s.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", content = "params", rename_all = "snake_case")]
pub enum Experiment {
    FreePacket(FreePacket),
    EigenstateHold(EigenstateHold),
    LambdaSweep(LambdaSweep),
    Equivariance(Equivariance),
    NelsonBorn(NelsonBorn),
    Relaxation(Relaxation),
    Measurement(Measurement),
    Contextuality(Contextuality),
}

pub const EXPERIMENTS: [&str; 8] = [
    "free_packet",
    "eigenstate_hold",
    "lambda_sweep",
    "equivariance",
    "nelson_born",
    "relaxation",
    "measurement",
    "contextuality",
];

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FreePacket(_) => "free_packet",
            Experiment::EigenstateHold(_) => "eigenstate_hold",
            Experiment::LambdaSweep(_) => "lambda_sweep",
            Experiment::Equivariance(_) => "equivariance",
            Experiment::NelsonBorn(_) => "nelson_born",
            Experiment::Relaxation(_) => "relaxation",
            Experiment::Measurement(_) => "measurement",
            Experiment::Contextuality(_) => "contextuality",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            Experiment::Equivariance(_) | Experiment::NelsonBorn(_) | Experiment::Relaxation(_) | Experiment::Measurement(_)
        )
    }

    /// Defaults for a named experiment.
    pub fn default_for(name: &str) -> CliResult<Self> {
        Self::parse_params(name, serde_json::Value::Object(Default::default()))
    }

    fn parse_params(name: &str, params: serde_json::Value) -> CliResult<Self> {
        fn p<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> CliResult<T> {
            serde_json::from_value(v).map_err(|e| CliError::Config(format!("params: {e}")))
        }
        Ok(match name {
            "free_packet" => Experiment::FreePacket(p(params)?),
            "eigenstate_hold" => Experiment::EigenstateHold(p(params)?),
            "lambda_sweep" => Experiment::LambdaSweep(p(params)?),
            "equivariance" => Experiment::Equivariance(p(params)?),
            "nelson_born" => Experiment::NelsonBorn(p(params)?),
            "relaxation" => Experiment::Relaxation(p(params)?),
            "measurement" => Experiment::Measurement(p(params)?),
            "contextuality" => Experiment::Contextuality(p(params)?),
            other => {
                return Err(CliError::Config(format!(
                    "experiment: unknown experiment `{other}`, expected one of {}",
                    EXPERIMENTS.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: Option<u64>) -> Self {
        Self { experiment, seed, output: None }
    }

    pub fn from_json_str(text: &str) -> CliResult<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let params = raw.params.unwrap_or_else(|| serde_json::Value::Object(Default::default()));
        let experiment = Experiment::parse_params(&raw.experiment, params)?;
        Ok(Self { experiment, seed: raw.seed, output: raw.output })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Seed for stochastic experiments; `None` for deterministic ones.
    pub fn required_seed(&self) -> CliResult<Option<u64>> {
        match (self.experiment.is_stochastic(), self.seed) {
            (true, None) => Err(CliError::Config(format!(
                "seed: required for the stochastic experiment `{}`",
                self.experiment.name()
            ))),
            (true, s) => Ok(s),
            (false, _) => Ok(None),
        }
    }

    /// Canonical JSON of everything that affects the outputs.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let e = ExperimentConfig::from_json_str(r#"{"experiment":"free_packet","params":{"nn":3}}"#).unwrap_err();
        assert!(e.to_string().contains("nn"), "{e}");
        let e = ExperimentConfig::from_json_str(r#"{"experiment":"free_packet","sede":3}"#).unwrap_err();
        assert!(e.to_string().contains("sede"), "{e}");
        let e = ExperimentConfig::from_json_str(r#"{"experiment":"warp"}"#).unwrap_err();
        assert!(e.to_string().contains("warp"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn defaults_and_seed_rules() {
        let c = ExperimentConfig::from_json_str(r#"{"experiment":"free_packet"}"#).unwrap();
        assert_eq!(c.experiment, Experiment::FreePacket(FreePacket::default()));
        assert_eq!(c.required_seed().unwrap(), None);
        let c = ExperimentConfig::from_json_str(r#"{"experiment":"nelson_born"}"#).unwrap();
        assert!(c.required_seed().is_err());
        let c = ExperimentConfig::from_json_str(r#"{"experiment":"nelson_born","seed":4}"#).unwrap();
        assert_eq!(c.required_seed().unwrap(), Some(4));
        for name in EXPERIMENTS {
            assert_eq!(Experiment::default_for(name).unwrap().name(), name);
        }
    }

    #[test]
    fn canonical_json_ignores_output() {
        let mut a = ExperimentConfig::from_json_str(r#"{"experiment":"contextuality","output":"x"}"#).unwrap();
        let b = ExperimentConfig::from_json_str(r#"{"experiment":"contextuality"}"#).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
        a.seed = Some(1);
        assert_ne!(a.canonical_json(), b.canonical_json());
    }
}
