//! Experiment runner behind the `sllab` binary: configuration, artifact
//! output with checksummed manifests, SVG plots, and run reports.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};

use config::ExperimentConfig;
use error::{CliError, CliResult};
use experiments::Summary;
use output::{sha256_hex, unix_now, Artifacts, RunManifest, DIAGNOSTIC, MANIFEST, SUMMARY};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory: `--out`, then the config's `output`, then `runs/<experiment>`.
pub fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()))
}

fn write_manifest(cfg: &ExperimentConfig, art: &Artifacts, started: u64) -> CliResult<RunManifest> {
    let manifest = RunManifest {
        tool: "sllab".into(),
        tool_version: TOOL_VERSION.into(),
        experiment: cfg.experiment.name().into(),
        seed: cfg.seed,
        config_hash: sha256_hex(cfg.canonical_json().as_bytes()),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: art.files().to_vec(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(art.dir().join(MANIFEST), text)?;
    Ok(manifest)
}

/// Run one experiment, writing artifacts, `summary.json` and the manifest.
///
/// Built-in checks do not turn into errors here; see [`Summary::failures`].
/// On a numerical abort a `diagnostic.json` is written before the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> CliResult<(Summary, RunManifest)> {
    let seed = cfg.required_seed()?;
    experiments::validate(&cfg.experiment)?;
    let started = unix_now();
    let mut art = Artifacts::create(dir)?;
    match experiments::execute(&cfg.experiment, seed, &mut art) {
        Ok(summary) => {
            art.write_json(SUMMARY, &summary)?;
            let manifest = write_manifest(cfg, &art, started)?;
            Ok((summary, manifest))
        }
        Err(CliError::Numeric(d)) => {
            art.write_json(
                DIAGNOSTIC,
                &serde_json::json!({ "experiment": cfg.experiment.name(), "seed": cfg.seed, "abort": d }),
            )?;
            write_manifest(cfg, &art, started)?;
            Err(CliError::Numeric(d))
        }
        Err(e) => Err(e),
    }
}

/// Verify a run directory's checksums and reload its summary.
pub fn load_report(dir: &Path) -> CliResult<(RunManifest, Option<Summary>, Vec<String>)> {
    let manifest = RunManifest::load(dir)?;
    let mismatched = manifest.verify(dir);
    let summary = std::fs::read_to_string(dir.join(SUMMARY))
        .ok()
        .map(|t| serde_json::from_str(&t))
        .transpose()
        .map_err(|e| CliError::Config(format!("{SUMMARY}: {e}")))?;
    Ok((manifest, summary, mismatched))
}
