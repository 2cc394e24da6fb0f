use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sllab_cli::config::ExperimentConfig;
use sllab_cli::error::CliError;
use sllab_cli::{experiments, load_report, output_dir, run_experiment};
use sllab_core::contextuality::fixtures;

#[derive(Parser)]
#[command(name = "sllab", version, about = "Stochastic-mechanics simulation laboratory")]
struct Cli {
    /// Worker threads for particle ensembles and sweeps.
    #[arg(long, global = true, env = "SLLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's `output`, else runs/<experiment>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat warnings as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Parse and check a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Bundled contextuality models.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
    /// Verify checksums of a finished run and print its summary.
    Report { dir: PathBuf },
}

#[derive(Subcommand)]
enum FixtureAction {
    List,
    /// Print one fixture as JSON.
    Show { name: String },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(CliError::Config("threads must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already set up: {e}");
        }
    }
    match cli.command {
        Command::Run { config, seed, out, strict } => {
            let cfg = match load(&config, seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = output_dir(&cfg, out.as_deref());
            match run_experiment(&cfg, &dir) {
                Ok((summary, _)) => {
                    print!("{}", summary.render());
                    println!("output: {}", dir.display());
                    let failures = summary.failures(strict);
                    if failures.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        fail(CliError::Assertion(failures))
                    }
                }
                Err(e) => {
                    if matches!(e, CliError::Numeric(_)) {
                        eprintln!("diagnostic written to {}", dir.join(sllab_cli::output::DIAGNOSTIC).display());
                    }
                    fail(e)
                }
            }
        }
        Command::Validate { config, seed } => {
            let checked = load(&config, seed).and_then(|cfg| {
                cfg.required_seed()?;
                experiments::validate(&cfg.experiment)?;
                Ok(cfg)
            });
            match checked {
                Ok(cfg) => {
                    println!("ok: {} ({})", cfg.experiment.name(), config.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Fixtures { action: FixtureAction::List } => {
            for name in fixtures::NAMES {
                match fixtures::by_name(name).expect("listed fixture") {
                    Ok(m) => {
                        let sc = m.scenario();
                        println!("{name:<22} {} observables, {} contexts", sc.observables().len(), sc.contexts().len());
                    }
                    Err(e) => return fail(e.into()),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Fixtures { action: FixtureAction::Show { name } } => match fixtures::by_name(&name) {
            Some(Ok(m)) => {
                println!("{}", serde_json::to_string_pretty(&m.to_json()).expect("model serializes"));
                ExitCode::SUCCESS
            }
            Some(Err(e)) => fail(e.into()),
            None => fail(CliError::Config(format!("unknown fixture `{name}`, expected one of {}", fixtures::NAMES.join(", ")))),
        },
        Command::Report { dir } => match load_report(&dir) {
            Ok((manifest, summary, mismatched)) => {
                println!(
                    "run of {} (sllab {}), config {}, {} outputs",
                    manifest.experiment,
                    manifest.tool_version,
                    &manifest.config_hash[..12],
                    manifest.outputs.len()
                );
                if let Some(s) = summary {
                    print!("{}", s.render());
                }
                if mismatched.is_empty() {
                    println!("checksums: ok");
                    ExitCode::SUCCESS
                } else {
                    fail(CliError::Assertion(mismatched.iter().map(|f| format!("checksum mismatch: {f}")).collect()))
                }
            }
            Err(e) => fail(e),
        },
    }
}
