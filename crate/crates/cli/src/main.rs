use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use mobidiff_cli::output::{self, RunManifest};
use mobidiff_cli::{CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "mobidiff", version, about = "Channel models and simulations for mobile diffusive molecular links")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set physical.num_molecules=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output` in the config.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "MOBIDIFF_WORKERS")]
    workers: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Channel impulse response and expected single-release signal.
    Cir(Common),
    /// Analytical and simulated received signal for a bit pattern.
    ReceivedSignal(Common),
    /// Distance law against simulated transceiver pairs.
    DistancePdf(Common),
    /// Error probability against the detection threshold.
    Ber(Common),
    /// Quick internal consistency checks.
    Selftest(Common),
}

fn run(command: Command, args: Common) -> Result<(), CliError> {
    let start = Instant::now();
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let (mut cfg, bytes) = ExperimentConfig::load(&args.config, &overrides)?;
    if let Some(out) = args.output {
        cfg.output = out;
    }
    let workers = match args.workers {
        Some(0) => return Err(CliError::Validation("workers must be >= 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    let artifacts = pool.install(|| command.run(&cfg))?;
    output::commit(&cfg.output, &artifacts)?;
    let manifest = RunManifest {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: output::sha256_hex(&bytes),
        config_file: args.config.display().to_string(),
        overrides: args.overrides,
        seed: cfg.seed,
        workers,
        artifacts: output::entries(&artifacts),
        duration_s: start.elapsed().as_secs_f64(),
    };
    output::write_manifest(&cfg.output, &manifest)?;
    for a in &artifacts {
        println!("{}: {} rows", cfg.output.join(&a.name).display(), a.rows);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (command, args) = match cli.command {
        Cmd::Cir(a) => (Command::Cir, a),
        Cmd::ReceivedSignal(a) => (Command::ReceivedSignal, a),
        Cmd::DistancePdf(a) => (Command::DistancePdf, a),
        Cmd::Ber(a) => (Command::Ber, a),
        Cmd::Selftest(a) => (Command::Selftest, a),
    };
    let level = if args.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
