mod commands;
mod manifest;

use clap::{Parser, Subcommand};

/// Exit codes: 0 ok, 1 check failure, 2 usage/config error,
/// 3 statistical insufficiency.
#[derive(Parser)]
#[command(name = "hermrand", version, about = "Randomized Hermite eigenspace experiments")]
struct Cli {
    /// Worker threads for the experiment runner (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: std::path::PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral-function tables: e_x profiles, Weyl counts, Mehler residuals,
    /// weighted increment norms.
    Spectral(commands::SpectralArgs),
    /// Run a Monte-Carlo experiment from a JSON config.
    Experiment(commands::ExperimentArgs),
    /// Fast invariant suite; exit 0 iff every check passes.
    Selftest(commands::SelftestArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Ok(dir) = std::env::var("HERMRAND_CACHE") {
        if !dir.is_empty() {
            hermrand_core::quadrature::set_cache_dir(Some(dir.into()));
        }
    }
    let threads = if cli.jobs == 0 { num_threads() } else { cli.jobs };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        eprintln!("warning: thread pool already initialized: {e}");
    }
    let code = match cli.command {
        Command::Spectral(args) => commands::run_spectral(&args, &cli.out),
        Command::Experiment(args) => commands::run_experiment_cmd(&args, &cli.out),
        Command::Selftest(args) => commands::run_selftest_cmd(&args),
    };
    std::process::exit(code);
}

fn num_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
