use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use kss_cli::{preset, run, Experiment, Options, RunConfig, PRESETS};

#[derive(Parser)]
#[command(name = "kss", version, about = "Krylov subspace spectral experiments for the wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error table against the exact semidiscrete solution.
    Convergence(Common),
    /// Energy-norm growth of the one-step operator, with optional blow-up runs.
    StabilityScan(Common),
    /// One integration with solution snapshots.
    SingleRun(Common),
    /// Acceleration wave in a dusty gas.
    DustyGas(Common),
}

#[derive(Args)]
struct Common {
    /// Built-in configuration.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = "KSS_THREADS")]
    threads: Option<usize>,
    /// Exit with status 2 if a run blows up.
    #[arg(long)]
    fail_on_blowup: bool,
    /// Also write a gnuplot script.
    #[arg(long)]
    plot: bool,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn resolve(experiment: Experiment, c: &Common) -> Result<(RunConfig, PathBuf)> {
    let (mut config, base) = match (&c.preset, &c.config) {
        (Some(name), _) => {
            let config = preset(name)
                .ok_or_else(|| anyhow!("unknown preset '{name}'; available: {}", PRESETS.join(", ")))?;
            (config, PathBuf::from("."))
        }
        (None, Some(path)) => {
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (RunConfig::load(path)?, base)
        }
        (None, None) => bail!("one of --preset and --config is required"),
    };
    if config.experiment != experiment {
        log::info!("running '{}' as {experiment}", config.name);
        config.experiment = experiment;
        config.validate()?;
    }
    Ok((config, base))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, common) = match &cli.command {
        Command::Convergence(c) => (Experiment::Convergence, c),
        Command::StabilityScan(c) => (Experiment::StabilityScan, c),
        Command::SingleRun(c) => (Experiment::SingleRun, c),
        Command::DustyGas(c) => (Experiment::DustyGas, c),
    };
    match execute(experiment, common) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(experiment: Experiment, common: &Common) -> Result<u8> {
    if let Some(threads) = common.threads {
        if threads == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let (config, base) = resolve(experiment, common)?;
    if common.print_config {
        print!("{}", config.to_toml()?);
        return Ok(0);
    }
    let options = Options {
        out: common.out.clone(),
        base,
        fail_on_blowup: common.fail_on_blowup,
        plot: common.plot,
    };
    let outcome = run(&config, &options)?;
    Ok(outcome.exit_code())
}
