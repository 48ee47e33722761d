//! `efontl` experiment CLI.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use efontl::harness::{
    aggregate_dir, compare_dirs, comparison_table, run_campaign, worker_count, CsvTable, ExperimentConfig,
};
use efontl::uncertainty::{check_spike, spike_experiment, spike_table, EstimatorConfig};

#[derive(Parser)]
#[command(name = "efontl", version, about = "Run and analyse EF-OnTL experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every seed of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory; defaults to runs/<config name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learning curve and final-window summary of a campaign directory.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Smoothing window in episodes.
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Welch comparison of two campaign directories.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// RND vs sars-RND action-change spike experiment.
    Spike {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19")]
        seeds: Vec<u64>,
        #[arg(long, default_value = "runs/spike")]
        out: PathBuf,
    },
}

fn print_table(t: &CsvTable) {
    print!("{t}");
}

fn run(config: &Path, seeds: Option<Vec<u64>>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    let out = out.unwrap_or_else(|| Path::new("runs").join(&cfg.name));
    let workers = worker_count();
    eprintln!(
        "running {} ({} seeds, {} workers) into {}",
        cfg.name,
        cfg.seeds.len(),
        workers,
        out.display()
    );
    let rep = run_campaign(&cfg, &out, workers)?;
    eprintln!("done: {} seeds run, {} already complete", rep.ran.len(), rep.resumed.len());
    Ok(())
}

fn aggregate(input: &Path, window: usize) -> Result<()> {
    if window == 0 {
        bail!("--window must be at least 1");
    }
    let agg = aggregate_dir(input, window)?;
    agg.curve_table().write(&input.join("curve.csv"))?;
    let summary = agg.summary_table();
    summary.write(&input.join("summary.csv"))?;
    print_table(&summary);
    Ok(())
}

fn compare(a: &Path, b: &Path) -> Result<()> {
    print_table(&comparison_table(&compare_dirs(a, b)?));
    Ok(())
}

fn spike(seeds: &[u64], out: &Path) -> Result<()> {
    if seeds.is_empty() {
        bail!("at least one seed is required");
    }
    let cfg = EstimatorConfig::default();
    let mut traces = Vec::new();
    let (mut spike, mut smaller, mut flat) = (0, 0, 0);
    for &s in seeds {
        let t = spike_experiment(s, &cfg)?;
        let c = check_spike(&t);
        spike += usize::from(c.first_spike);
        smaller += usize::from(c.second_smaller);
        flat += usize::from(c.flat);
        traces.extend(t);
    }
    let path = out.join("spike.csv");
    spike_table(&traces).write(&path).with_context(|| format!("writing {}", path.display()))?;
    let n = seeds.len();
    println!("seeds with a sars-RND spike at the first change: {spike}/{n}");
    println!("seeds with a smaller sars-RND spike at the second change: {smaller}/{n}");
    println!("seeds with a flat RND trace: {flat}/{n}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config, seeds, out } => run(&config, seeds, out),
        Cmd::Aggregate { input, window } => aggregate(&input, window),
        Cmd::Compare { a, b } => compare(&a, &b),
        Cmd::Spike { seeds, out } => spike(&seeds, &out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
