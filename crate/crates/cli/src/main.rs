use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ef_spectral::experiment::{
    aggregate, read_csv, run_dataset, run_sweep, write_aggregate_csv, write_csv, ExperimentConfig,
};
use ef_spectral::mechanism::{privacy_audit, PrivacyBudget};

/// Edge-flip private spectral community detection experiments.
#[derive(Parser)]
#[command(name = "ef-spectral", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a block-model regime over its n and epsilon grids.
    Sweep { config: PathBuf },
    /// Privatize and cluster an observed network repeatedly.
    Dataset { config: PathBuf },
    /// Per-cell means and deviations of a result CSV.
    Aggregate { csv: PathBuf },
    /// Exhaustive likelihood-ratio check of the edge flip on tiny graphs.
    Audit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: PrivacyBudget,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config =
        ExperimentConfig::load(path).with_context(|| format!("invalid config {}", path.display()))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = cli.out.as_deref();
    match cli.command {
        Command::Sweep { config } => {
            let config = load_config(&config, cli.seed)?;
            let rows = run_sweep(&config, threads)?;
            let failed = rows.iter().filter(|r| r.is_error()).count();
            if failed > 0 {
                log::warn!("{failed} of {} replications failed", rows.len());
            }
            write_csv(&rows, output(out)?)?;
        }
        Command::Dataset { config } => {
            let config = load_config(&config, cli.seed)?;
            let rows = run_dataset(&config, threads)?;
            write_csv(&rows, output(out)?)?;
        }
        Command::Aggregate { csv } => {
            let file = File::open(&csv).with_context(|| format!("cannot open {}", csv.display()))?;
            let rows = read_csv(file).with_context(|| format!("invalid result file {}", csv.display()))?;
            write_aggregate_csv(&aggregate(&rows), output(out)?)?;
        }
        Command::Audit { n, epsilon } => {
            let report = privacy_audit(n, epsilon)?;
            let bound = epsilon.epsilon().map_or(f64::INFINITY, f64::exp);
            let mut w = output(out)?;
            writeln!(w, "n = {} epsilon = {epsilon}", report.n)?;
            writeln!(w, "outputs = {} neighbor pairs = {}", report.outputs, report.neighbor_pairs)?;
            writeln!(w, "max likelihood ratio = {:.12}", report.max_ratio)?;
            writeln!(w, "e^epsilon            = {bound:.12}")?;
            w.flush()?;
        }
    }
    Ok(())
}
