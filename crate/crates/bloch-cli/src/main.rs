use std::path::PathBuf;
use std::process::ExitCode;

use bloch_cli::config::{self, ConfigError, ExperimentConfig, TaskKind};
use bloch_cli::run::{self, RunError};
use clap::{Parser, Subcommand};

/// Floquet-Bloch band structure, exact evolution, and ballistic transport
/// measurements for periodic Jacobi operators on `Z^d`.
#[derive(Parser)]
#[command(name = "bloch", version, disable_help_subcommand = true)]
struct Cli {
    /// Experiment description (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory. Precedence: this flag, then BLOCH_OUT, then the
    /// config's [output] dir, then "out".
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed override for every pseudo-random choice.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads. Affects speed only, never results.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Band energies and velocities over the quasimomentum grid.
    Bands,
    /// Evolve a state and record its position trace.
    Evolve,
    /// Compare Heisenberg position against the asymptotic velocity.
    Velocity,
    /// Run the deterministic assertion suites.
    Verify,
}

impl Command {
    fn kind(self) -> TaskKind {
        match self {
            Command::Bands => TaskKind::Bands,
            Command::Evolve => TaskKind::Evolve,
            Command::Velocity => TaskKind::Velocity,
            Command::Verify => TaskKind::Verify,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error at `--threads`: must be positive");
            return ExitCode::from(2);
        }
        // Once per process; a second call (tests) is a no-op.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let started = std::time::Instant::now();
    match execute(&cli) {
        Ok(outcome) => {
            eprintln!("wall time {:.3}s", started.elapsed().as_secs_f64());
            if outcome.assertions_passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("assertion failures recorded in verify.csv");
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("{err}");
            let code = match &err {
                RunError::Config(_) => 2,
                RunError::Core(e) if e.is_resource_guard() => 3,
                RunError::Core(_) => 2,
                RunError::Io(_) => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn execute(cli: &Cli) -> Result<run::Outcome, RunError> {
    let (mut config, warnings) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::Config(ConfigError::new(
                    "--config",
                    format!("{}: {e}", path.display()),
                ))
            })?;
            config::parse_config(&text)?
        }
        None => (ExperimentConfig::default(), Vec::new()),
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let requested = cli.command.kind();
    match &config.task {
        Some(section) => {
            let declared = section.kind()?;
            if declared != requested {
                return Err(RunError::Config(ConfigError::new(
                    "task",
                    format!(
                        "config declares a `{}` task but the `{}` subcommand was invoked",
                        declared.name(),
                        requested.name()
                    ),
                )));
            }
        }
        // Only `verify` has a complete default task.
        None if requested == TaskKind::Verify => {}
        None => {
            return Err(RunError::Config(ConfigError::new(
                "task",
                format!("the `{}` subcommand needs a config with a [task.{}] section",
                    requested.name(),
                    requested.name()
                ),
            )));
        }
    }

    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    let out_dir: PathBuf = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("BLOCH_OUT").filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| {
            config
                .output
                .as_ref()
                .and_then(|o| o.dir.as_ref())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("out"));

    let outcome = run::run(&config, requested, &out_dir)?;
    for path in &outcome.files {
        eprintln!("wrote {}", path.display());
    }
    println!(
        "{}: {} file(s) in {}",
        requested.name(),
        outcome.files.len(),
        out_dir.display()
    );
    Ok(outcome)
}
