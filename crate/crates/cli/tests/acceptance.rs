//! Acceptance suite. Prints one `AC<n> PASS|FAIL` line per criterion and
//! exits non-zero if any criterion fails. Run alone with
//! `cargo test -p sllab --test acceptance`.

#[path = "../../core/tests/support/crank_nicolson.rs"]
mod oracle;

use std::f64::consts::SQRT_2;
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::Value;
use sllab_cli::config::{Experiment, ExperimentConfig, EXPERIMENTS};
use sllab_cli::experiments::Summary;
use sllab_cli::run_experiment;
use sllab_core::contextuality::{
    check_no_signalling, chsh_value, contextual_fraction_lp, enumerate_global_sections, fixtures, noncontextual_decompose,
    Decomposition,
};
use sllab_core::dynamics::{evolve, EvolutionConfig};
use sllab_core::grid_field::{Grid, PhysicalParams, PotentialSpec, Wavefunction};

const SEED: u64 = 20240601;

const AC1_WIDTH_TOL: f64 = 1e-3;
const AC1_MAX_TIME: Duration = Duration::from_secs(10);
const AC2_DENSITY_TOL: f64 = 1e-6;
const AC2_ENERGY_TOL: f64 = 1e-7;
const AC3_STATIC_TOL: f64 = 1e-4;
const AC3_MIN_SPREAD: f64 = 1.3;
const AC4_MAX_TIME: Duration = Duration::from_secs(120);
const AC5_MIN_PASSES: u64 = 18;
const AC5_SEEDS: u64 = 20;
const P_PASS: f64 = 0.01;
const AC6_CONTROL_P: f64 = 1e-6;
const AC7_OVERLAP: f64 = 0.01;
const AC7_NORM_TOL: f64 = 1e-6;
const AC8_CF_TOL: f64 = 1e-9;
const AC8_CHSH_TOL: f64 = 1e-9;
const AC8_SINGLET_CF_TOL: f64 = 1e-6;
const AC8_MAX_TIME: Duration = Duration::from_secs(5);
const AC9_TOL: f64 = 1e-5;

type Outcome = Result<(bool, String), String>;

fn run(experiment: Experiment, seed: Option<u64>) -> Result<(Summary, Duration), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::new(experiment, seed);
    let start = Instant::now();
    let (summary, _) = run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())?;
    Ok((summary, start.elapsed()))
}

fn metric(s: &Summary, key: &str) -> Result<Value, String> {
    s.metrics.get(key).cloned().ok_or_else(|| format!("metric `{key}` missing"))
}

fn num(v: &Value) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("not a number: {v}"))
}

fn default_params(name: &str) -> Experiment {
    Experiment::default_for(name).expect("known experiment")
}

fn ac1() -> Outcome {
    let (s, took) = run(default_params("free_packet"), None)?;
    let width = num(&metric(&s, "width")?)?;
    let rel = (width / SQRT_2 - 1.0).abs();
    Ok((
        rel < AC1_WIDTH_TOL && took < AC1_MAX_TIME,
        format!("width(t=2) = {width:.6}, |rel err| = {rel:.2e} < {AC1_WIDTH_TOL:e}, runtime {:.2}s < 10s", took.as_secs_f64()),
    ))
}

fn ac2() -> Outcome {
    let (s, _) = run(default_params("eigenstate_hold"), None)?;
    let d = num(&metric(&s, "density_drift")?)?;
    let e = num(&metric(&s, "energy_drift")?)?;
    Ok((
        d < AC2_DENSITY_TOL && e < AC2_ENERGY_TOL,
        format!("1000 steps: density drift {d:.2e} < {AC2_DENSITY_TOL:e}, energy drift {e:.2e} < {AC2_ENERGY_TOL:e}"),
    ))
}

fn ac3() -> Outcome {
    let err = |e: sllab_core::Error| e.to_string();
    let g = Grid::line(40.0, 512).map_err(err)?;
    let psi = Wavefunction::gaussian(&g, 0.0, 1.0, 0.0).map_err(err)?;
    let p = PhysicalParams::quantum(1.0, 1.0).map_err(err)?;
    let classical = EvolutionConfig::new(1e-3, 2000, p.clone().with_lambda(0.0).map_err(err)?, PotentialSpec::Free, 500);
    let tr = evolve(&psi, &classical).map_err(err)?;
    if let Some(reason) = &tr.truncated {
        return Ok((false, format!("lambda = 0 run truncated: {reason:?}")));
    }
    let rho0 = psi.density();
    let drift = tr
        .snapshots
        .iter()
        .map(|s| s.density().iter().zip(&rho0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let quantum = evolve(&psi, &EvolutionConfig::new(1e-3, 2000, p, PotentialSpec::Free, 2000)).map_err(err)?;
    let ratio = (quantum.last().moments(0).1 / psi.moments(0).1).sqrt();
    Ok((
        drift < AC3_STATIC_TOL && ratio > AC3_MIN_SPREAD,
        format!("lambda=0 density drift to t=2 {drift:.2e} < {AC3_STATIC_TOL:e}; lambda=1 width ratio {ratio:.4} > {AC3_MIN_SPREAD}"),
    ))
}

fn ac4() -> Outcome {
    let (s, took) = run(default_params("lambda_sweep"), None)?;
    let points: Vec<(f64, f64)> = serde_json::from_value(metric(&s, "visibility")?).map_err(|e| e.to_string())?;
    let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1);
    let strict = points.len() == 5 && points[4].1 > points[0].1;
    let values: Vec<String> = points.iter().map(|(l, v)| format!("{l}:{v:.4}")).collect();
    Ok((
        monotone && strict && took < AC4_MAX_TIME,
        format!("V(lambda) = [{}], non-decreasing {monotone}, endpoints rise {strict}, runtime {:.1}s < 120s", values.join(", "), took.as_secs_f64()),
    ))
}

fn ac5() -> Outcome {
    let mut exp = default_params("equivariance");
    if let Experiment::Equivariance(p) = &mut exp {
        p.seeds = AC5_SEEDS;
        p.particles = 10_000;
        p.t = 2.0;
    }
    let (s, _) = run(exp, Some(SEED))?;
    let passes = metric(&s, "passes")?.as_u64().ok_or("passes not an integer")?;
    let pmin = metric(&s, "p_values")?
        .as_array()
        .ok_or("p_values not a list")?
        .iter()
        .filter_map(Value::as_f64)
        .fold(1.0, f64::min);
    Ok((
        passes >= AC5_MIN_PASSES,
        format!("{passes} of {AC5_SEEDS} seeds with chi2 p > {P_PASS} at t=2 (need {AC5_MIN_PASSES}), smallest p {pmin:.3}"),
    ))
}

fn ac6() -> Outcome {
    let mut exp = default_params("nelson_born");
    if let Experiment::NelsonBorn(p) = &mut exp {
        p.particles = 10_000;
        p.t = 20.0;
    }
    let (s, _) = run(exp, Some(SEED))?;
    let pn = num(&metric(&s, "nelson")?["p_value"])?;
    let pc = num(&metric(&s, "brownian_control")?["p_value"])?;
    Ok((
        pn > P_PASS && pc < AC6_CONTROL_P,
        format!("Nelson p = {pn:.4} > {P_PASS}; driftless control p = {pc:.2e} < {AC6_CONTROL_P:e}"),
    ))
}

fn ac7() -> Outcome {
    let exp = default_params("measurement");
    if let Experiment::Measurement(p) = &exp {
        if p.model.branch_probabilities.first() != Some(&0.8) || p.particles != 10_000 {
            return Err("default measurement config is not the 0.8 / 10^4 setup".into());
        }
    }
    let (s, _) = run(exp, Some(SEED))?;
    let sigma = (0.8f64 * 0.2 / 1e4).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in ["bohmian", "nelson"] {
        let f = num(&metric(&s, &format!("{kind}_frequencies"))?[0])?;
        let ok = (f - 0.8).abs() <= 3.0 * sigma;
        pass &= ok;
        parts.push(format!("{kind} f_A = {f:.4}"));
    }
    let overlap = num(&metric(&s, "overlap")?)?;
    let drift = num(&metric(&s, "norm_drift")?)?;
    pass &= overlap < AC7_OVERLAP && drift < AC7_NORM_TOL;
    Ok((
        pass,
        format!(
            "{} (0.8 +- {:.4}), overlap {overlap:.2e} < {AC7_OVERLAP}, norm drift {drift:.2e} < {AC7_NORM_TOL:e}",
            parts.join(", "),
            3.0 * sigma
        ),
    ))
}

fn ac8() -> Outcome {
    let err = |e: sllab_core::Error| e.to_string();
    let start = Instant::now();
    let pr = fixtures::pr_box().map_err(err)?;
    let ns = check_no_signalling(&pr, 0.0);
    let sections = enumerate_global_sections(&pr).map_err(err)?.len();
    let assignments = pr.scenario().assignment_count();
    let cf_pr = contextual_fraction_lp(&pr).map_err(err)?.contextual_fraction;
    let chsh_pr = chsh_value(&pr).map_err(err)?;
    let pr_ok = ns.max_mismatch == 0.0
        && sections == 0
        && assignments == 16
        && (cf_pr - 1.0).abs() <= AC8_CF_TOL
        && (chsh_pr - 4.0).abs() <= AC8_CHSH_TOL;

    let singlet = fixtures::singlet_chsh().map_err(err)?;
    let chsh_s = chsh_value(&singlet).map_err(err)?;
    let cf_s = contextual_fraction_lp(&singlet).map_err(err)?.contextual_fraction;
    let cert = match noncontextual_decompose(&singlet).map_err(err)? {
        Decomposition::Infeasible { certificate, .. } => certificate.value,
        Decomposition::Feasible { .. } => f64::NAN,
    };
    let singlet_ok = (chsh_s - 2.0 * SQRT_2).abs() <= AC8_CHSH_TOL
        && (cf_s - (SQRT_2 - 1.0)).abs() <= AC8_SINGLET_CF_TOL
        && cert > 2.0;

    let classical = fixtures::classical_correlated().map_err(err)?;
    let residual = match noncontextual_decompose(&classical).map_err(err)? {
        Decomposition::Feasible { weights } => {
            let sc = classical.scenario();
            let mut worst = 0.0f64;
            for (c, table) in classical.tables().iter().enumerate() {
                let mut rebuilt = vec![0.0; table.len()];
                for (g, w) in &weights {
                    rebuilt[sc.restrict(c, &g.0)] += w;
                }
                worst = rebuilt.iter().zip(table).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
            }
            worst
        }
        Decomposition::Infeasible { .. } => f64::INFINITY,
    };
    let took = start.elapsed();
    Ok((
        pr_ok && singlet_ok && residual == 0.0 && took < AC8_MAX_TIME,
        format!(
            "PR box: signalling {:.1e}, {sections} sections of {assignments}, CF {cf_pr}, CHSH {chsh_pr}; \
             singlet: CHSH {chsh_s:.12}, CF {cf_s:.9}, certificate {cert:.6} > 2; \
             classical decomposition residual {residual:e}; runtime {:.2}s < 5s",
            ns.max_mismatch,
            took.as_secs_f64()
        ),
    ))
}

fn ac9() -> Outcome {
    let err = |e: sllab_core::Error| e.to_string();
    let (length, n, dt, steps) = (16.0, 128, 2e-3, 100);
    let g = Grid::line(length, n).map_err(err)?;
    let psi = Wavefunction::gaussian(&g, 1.5, 0.8, 0.7).map_err(err)?;
    let pot = PotentialSpec::Harmonic { omega: 1.0 };
    let p = PhysicalParams::quantum(1.0, 1.0).map_err(err)?;
    let tr = evolve(&psi, &EvolutionConfig::new(dt, steps, p, pot.clone(), steps)).map_err(err)?;
    let v = pot.evaluate(&g, 1.0).map_err(err)?;
    let re: Vec<f64> = psi.values().iter().map(|z| z.re).collect();
    let im: Vec<f64> = psi.values().iter().map(|z| z.im).collect();
    let reference = oracle::crank_nicolson(&re, &im, &v, length, dt, steps);
    let diff = tr.last().values().iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok((diff < AC9_TOL, format!("{n} points, {steps} steps: max |psi_split - psi_CN| = {diff:.2e} < {AC9_TOL:e}")))
}

/// Small versions of every experiment; the comparison is about bytes, not physics.
fn reduced(name: &str) -> Experiment {
    let mut exp = default_params(name);
    match &mut exp {
        Experiment::FreePacket(p) => {
            p.n = 128;
            p.t = 0.2;
        }
        Experiment::EigenstateHold(p) => p.steps = 100,
        Experiment::LambdaSweep(p) => {
            p.lambdas = vec![0.0, 1.0];
            p.n = 256;
            p.t = 0.3;
        }
        Experiment::Equivariance(p) => {
            p.n = 256;
            p.t = 0.3;
            p.seeds = 2;
            p.particles = 1000;
        }
        Experiment::NelsonBorn(p) => {
            p.n = 128;
            p.t = 0.5;
            p.particles = 1000;
        }
        Experiment::Relaxation(p) => {
            p.t = 0.5;
            p.particles = 1000;
        }
        Experiment::Measurement(p) => p.particles = 200,
        Experiment::Contextuality(_) => {}
    }
    exp
}

fn files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != "manifest.json" {
            out.push((name, std::fs::read(entry.path()).map_err(|e| e.to_string())?));
        }
    }
    out.sort();
    Ok(out)
}

fn ac10() -> Outcome {
    let mut differing = Vec::new();
    let mut compared = 0;
    for name in EXPERIMENTS {
        let exp = reduced(name);
        let seed = exp.is_stochastic().then_some(SEED);
        let cfg = ExperimentConfig::new(exp, seed);
        let mut runs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let (_, manifest) = run_experiment(&cfg, dir.path()).map_err(|e| format!("{name}: {e}"))?;
            let hashes: Vec<(String, String)> = manifest.outputs.into_iter().map(|f| (f.path, f.sha256)).collect();
            runs.push((files(dir.path())?, hashes));
        }
        compared += runs[0].0.len();
        if runs[0] != runs[1] {
            differing.push(name);
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} experiments run twice (reduced sizes), {compared} files byte-identical", EXPERIMENTS.len())
        } else {
            format!("outputs differ for {}", differing.join(", "))
        },
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] =
        [("AC1", ac1), ("AC2", ac2), ("AC3", ac3), ("AC4", ac4), ("AC5", ac5), ("AC6", ac6), ("AC7", ac7), ("AC8", ac8), ("AC9", ac9), ("AC10", ac10)];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let mut failed = 0;
    for (id, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
