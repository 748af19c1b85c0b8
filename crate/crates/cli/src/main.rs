use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dampwave_cli::experiments::{self, CATALOG};
use dampwave_cli::output::OutputDir;
use dampwave_cli::{commands, sweep, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dampwave", version, about = "Damped wave experiments on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for random initial data; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial data and write the energy trace.
    Simulate,
    /// Σ(t) and L(T) for the configured damping.
    Sigma,
    /// Time-dependent control condition check with witness.
    Tgcc,
    /// Beam quasi-solution vs exact evolution.
    Beam,
    /// Observability ratio over start times.
    Observe,
    /// Fit decay models to a trace CSV.
    Fit,
    /// Run the [sweep] section concurrently.
    Sweep,
    /// Run a named experiment and check its acceptance criterion.
    Reproduce { name: String },
    /// List the named experiments.
    ListExperiments,
}

fn load(cli: &Cli, kind: &str) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config(format!("{kind} needs --config PATH")))?;
    let cfg = ExperimentConfig::load(path)?;
    cfg.require_kind(kind)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, dir))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let kind = match &cli.command {
        Command::ListExperiments => {
            for e in CATALOG {
                println!("{:<22} criterion {:<3} {}", e.name, e.criterion, e.summary);
            }
            return Ok(());
        }
        Command::Reproduce { name } => {
            let seed = cli.seed.unwrap_or(0);
            let outcome = experiments::reproduce(name, seed, &cli.out.join(name))?;
            for c in &outcome.checks {
                println!("{}", c.line());
            }
            return if outcome.passed() {
                Ok(())
            } else {
                Err(CliError::Acceptance(format!("{name}: see {}", cli.out.join(name).join("checks.json").display())))
            };
        }
        Command::Simulate => "simulate",
        Command::Sigma => "sigma",
        Command::Tgcc => "tgcc",
        Command::Beam => "beam",
        Command::Observe => "observe",
        Command::Fit => "fit",
        Command::Sweep => "sweep",
    };
    let (cfg, dir) = load(cli, kind)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let mut out = OutputDir::create(&cli.out)?;
    let summary = match kind {
        "simulate" => commands::simulate(&cfg, seed, &mut out)?,
        "sigma" => commands::sigma_cmd(&cfg, &mut out)?,
        "tgcc" => commands::tgcc(&cfg, &mut out)?,
        "beam" => commands::beam(&cfg, &mut out)?,
        "observe" => commands::observe(&cfg, seed, &mut out)?,
        "fit" => commands::fit(&cfg, &dir, &mut out)?,
        _ => {
            let (points, slope) = sweep::run(&cfg, seed, &mut out)?;
            let failed = points.iter().filter(|p| p.measured.is_err()).count();
            format!("{} points ({failed} failed), fitted slope {slope:.4}", points.len())
        }
    };
    out.finish(kind, &cfg.to_toml(), seed)?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
