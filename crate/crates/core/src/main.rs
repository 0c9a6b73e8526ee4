use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sporex::harness::{
    aggregate_last100, compare, parse_grid, plot_learning_curves, run_experiment, sweep, verify, ExperimentConfig,
    Overrides, RunLogs, VariantSummary,
};
use sporex::{Error, Result};

const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "sporex", version, about = "Policy-gradient training with pluggable exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write a run directory.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Cartesian grid of configs and report the best cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate last-100 means of run directories against a baseline.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Variant name of the baseline; defaults to the run with exploration kind `none`.
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Draw smoothed learning curves of run directories as SVG.
    Plot {
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in gradient, count, shaping, statistics and GAE checks.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Train { config, seed, steps, out } => train(&config, Overrides { seed, total_steps: steps, out }),
        Command::Sweep { config, grid, out } => run_sweep(&config, &grid, &out),
        Command::Compare { runs, out, baseline } => run_compare(&runs, &out, baseline.as_deref()),
        Command::Plot { runs, window, out } => run_plot(&runs, window, &out),
        Command::Verify => run_verify(),
    }
}

fn train(config: &Path, overrides: Overrides) -> Result<u8> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    cfg.apply(&overrides)?;
    let manifest = run_experiment(&cfg)?;
    for s in &manifest.seeds {
        println!("seed {}: {:?}, {} episodes, {} steps", s.seed, s.status, s.episodes, s.global_step);
    }
    if let Some(f) = manifest.failed().next() {
        return Err(Error::Numerical(format!("seed {} failed: {}", f.seed, f.error.clone().unwrap_or_default())));
    }
    if let Ok(agg) = aggregate_last100(&RunLogs::load(&cfg.out)?.records) {
        println!("last-100 mean {:.4} (std {:.4}) -> {}", agg.mean, agg.std, cfg.out.display());
    }
    Ok(0)
}

fn run_sweep(config: &Path, grid: &Path, out: &Path) -> Result<u8> {
    let base: toml::Table = std::fs::read_to_string(config)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", config.display())))?
        .parse()
        .map_err(|e| Error::Config(format!("invalid TOML in {}: {e}", config.display())))?;
    let grid_text = std::fs::read_to_string(grid)
        .map_err(|e| Error::Config(format!("cannot read grid {}: {e}", grid.display())))?;
    let axes = parse_grid(&grid_text)?;
    std::fs::create_dir_all(out)?;
    let result = sweep(&base, &axes, out)?;
    print!("{}", result.to_csv());
    println!("best cell {} -> {}", result.best, out.join("best.json").display());
    Ok(0)
}

fn summaries(runs: &[PathBuf]) -> Result<Vec<(RunLogs, VariantSummary)>> {
    runs.iter()
        .map(|dir| {
            let logs = RunLogs::load(dir)?;
            let aggregate = aggregate_last100(&logs.records)
                .map_err(|e| Error::Aggregation(format!("{}: {e}", dir.display())))?;
            let s = VariantSummary { env: logs.env_id().to_string(), variant: logs.name().to_string(), aggregate };
            Ok((logs, s))
        })
        .collect()
}

fn run_compare(runs: &[PathBuf], out: &Path, baseline: Option<&str>) -> Result<u8> {
    let all = summaries(runs)?;
    let is_base = |logs: &RunLogs| match baseline {
        Some(name) => logs.name() == name,
        None => logs.manifest.config.explore.kind() == "none",
    };
    let (base, variants): (Vec<_>, Vec<_>) = all.into_iter().partition(|(l, _)| is_base(l));
    if base.is_empty() {
        return Err(Error::Usage(match baseline {
            Some(b) => format!("no run named `{b}` among --runs"),
            None => "no baseline run (exploration kind `none`); pass --baseline".into(),
        }));
    }
    let base: Vec<_> = base.into_iter().map(|(_, s)| s).collect();
    let variants: Vec<_> = variants.into_iter().map(|(_, s)| s).collect();
    let table = compare(&base, &variants)?;
    std::fs::write(out, table.to_csv())?;
    for r in &table.rows {
        println!(
            "{:<20} {:<24} mean {:>10.4} std {:>10.4}{}{}",
            r.env,
            r.variant,
            r.mean,
            r.std,
            if r.beats_baseline { "  beats baseline" } else { "" },
            if r.winner { "  *" } else { "" }
        );
    }
    Ok(0)
}

fn run_plot(runs: &[PathBuf], window: usize, out: &Path) -> Result<u8> {
    let sets = runs
        .iter()
        .map(|dir| RunLogs::load(dir).map(|l| (l.name().to_string(), l.records)))
        .collect::<Result<Vec<_>>>()?;
    let fig = plot_learning_curves(&sets, window);
    for label in &fig.skipped {
        eprintln!("warning: skipped {label}: no episodes");
    }
    std::fs::write(out, &fig.svg)?;
    Ok(0)
}

fn run_verify() -> Result<u8> {
    let checks = verify::run_all()?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_VERIFY_FAILED })
}
