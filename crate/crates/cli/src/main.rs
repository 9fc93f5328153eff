use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optolase_cli::{parse_config, pool::resolve_jobs, run, ConfigError, Kind};

/// Two-tone optomechanical lasing experiments.
#[derive(Parser)]
#[command(name = "optolase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full-model steady states along a drive-amplitude or coupling sweep.
    SteadystateSweep(RunArgs),
    /// Steady-state coherences over a grid of the two detunings.
    DetuningMap(RunArgs),
    /// Occupation and g2 traces from the initial state.
    TimeEvolution(RunArgs),
    /// Number distributions and Wigner functions at one operating point.
    Distributions(RunArgs),
    /// Emission spectra for active and passive drive settings.
    Spectrum(RunArgs),
    /// Effective-model coherence maps over (E_1, E_2) or (E, g).
    AmplitudeMap(RunArgs),
    /// Closed-form occupations, moment oracle and stability eigenvalues.
    Analytics(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; falls back to OPTOLASE_JOBS, then to the machine's parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the [output] dir of the config.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::SteadystateSweep(a) => (Kind::SteadystateSweep, a),
        Command::DetuningMap(a) => (Kind::DetuningMap, a),
        Command::TimeEvolution(a) => (Kind::TimeEvolution, a),
        Command::Distributions(a) => (Kind::Distributions, a),
        Command::Spectrum(a) => (Kind::Spectrum, a),
        Command::AmplitudeMap(a) => (Kind::AmplitudeMap, a),
        Command::Analytics(a) => (Kind::Analytics, a),
    };
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut cfg = match parse_config(&args.config) {
        Ok(c) if c.kind == kind => c,
        Ok(c) => {
            eprintln!(
                "error: {}",
                ConfigError::Invalid {
                    key: "kind".into(),
                    reason: format!("config is {} but {kind} was requested", c.kind)
                }
            );
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(dir) = args.output {
        cfg.output.dir = dir;
    }
    let jobs = resolve_jobs(args.jobs);
    match run(&cfg, jobs) {
        Ok(summary) => {
            println!(
                "{} of {} points ok; manifest {}",
                summary.total - summary.failed,
                summary.total,
                summary.manifest.display()
            );
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
