//! `golu-lab`: every experiment of the golu-core library as a seeded subcommand that
//! writes CSV/JSON artifacts and a `manifest.json` into its output directory.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Parser, Subcommand};
use golu_core::Precision;

use commands::Outcome;
use config::{resolve, usage, Global, Manifest, Options, Resolved, VERSIONS};

pub const THREADS_ENV: &str = "GOLU_LAB_THREADS";

#[derive(Parser)]
#[command(name = "golu-lab", version, about = "GoLU activation workbench")]
struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default runs/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its values. A manifest.json is accepted too.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// f32 or f64; only bench supports f32.
    #[arg(long, global = true)]
    precision: Option<Precision>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-difference gradient check of small networks.
    Gradcheck(commands::GradcheckOpts),
    /// Output moments of activations under Gaussian inputs.
    Variance(commands::VarianceOpts),
    /// Conv + batchnorm + activation output variance on synthetic images.
    Squeeze(commands::SqueezeOpts),
    /// Gate density profiles and activation output histograms.
    Density(commands::DensityOpts),
    /// Sigmoid minus Gompertz gate, raw and scaled by e^{2x}.
    Gap(commands::GapOpts),
    /// Forward-kernel timing relative to ReLU.
    Bench(commands::BenchOpts),
    /// Train an MLP on a synthetic 2-D set.
    Train(commands::TrainCmdOpts),
    /// Test loss over a random 2-D slice of weight space.
    Landscape(commands::LandscapeOpts),
    /// Mean ranks, Friedman test and Nemenyi critical difference.
    Rank(commands::RankOpts),
    /// Weight histograms and bulk variance of trained nets.
    Weights(commands::WeightsOpts),
}

fn configure_threads() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(rayon::current_num_threads())
}

fn execute<T: Options>(
    name: &str,
    global: &Global,
    flags: &T,
    config: Option<&std::path::Path>,
    run: fn(&Resolved<T>) -> Result<Outcome>,
) -> Result<bool> {
    let threads = configure_threads()?;
    let cfg = resolve(name, global, flags, config)?;
    let start = Instant::now();
    let outcome = run(&cfg)?;
    let manifest = Manifest {
        command: name,
        config: &cfg,
        versions: VERSIONS,
        threads,
        artifacts: outcome.artifacts.names(),
        passed: outcome.passed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    outcome.artifacts.write_all(&cfg.out)?;
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    std::fs::write(cfg.out.join("manifest.json"), body)?;
    println!("{name}: {}", outcome.summary);
    println!("artifacts in {}", cfg.out.display());
    Ok(outcome.passed)
}

fn run(cli: Cli) -> Result<bool> {
    let global = Global { seed: cli.seed, out: cli.out, precision: cli.precision };
    let config = cli.config.as_deref();
    match cli.command {
        Command::Gradcheck(o) => execute("gradcheck", &global, &o, config, commands::gradcheck),
        Command::Variance(o) => execute("variance", &global, &o, config, commands::variance),
        Command::Squeeze(o) => execute("squeeze", &global, &o, config, commands::squeeze),
        Command::Density(o) => execute("density", &global, &o, config, commands::density),
        Command::Gap(o) => execute("gap", &global, &o, config, commands::gap),
        Command::Bench(o) => execute("bench", &global, &o, config, commands::bench),
        Command::Train(o) => execute("train", &global, &o, config, commands::train_cmd),
        Command::Landscape(o) => execute("landscape", &global, &o, config, commands::landscape),
        Command::Rank(mut o) => {
            o.absorb_flags();
            execute("rank", &global, &o, config, commands::rank)
        }
        Command::Weights(o) => execute("weights", &global, &o, config, commands::weights),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<golu_core::Error>() {
                Some(golu_core::Error::Usage(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
