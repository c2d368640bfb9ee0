//! `superres` — run spike-train recovery experiments from a TOML config.
//!
//! Three subcommands:
//!
//! * `run` executes the experiment exactly as configured;
//! * `sweep-f` does the same but swaps in a default super-resolution-factor
//!   grid when the config lists fewer than two factors;
//! * `fit-pla` fits per-algorithm power-law exponents (slope of log error vs
//!   log F) to a previously emitted plot-data CSV.
//!
//! Results land in `--out` as a long-form `results.csv`, one plot-data CSV
//! per (snr, η) pair, and a `run_metadata.json` echoing the configuration.
//! Failures print a single JSON object (`{"error": …}`) to stderr and exit
//! nonzero, so scripts can consume either outcome.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use superres_core::harness::{
    emit_results, estimate_pla_exponent, run_experiment, sweep_superresolution_factor,
    ExperimentConfig, ResultTable,
};

#[derive(Parser)]
#[command(
    name = "superres",
    version,
    about = "Super-resolution spike recovery from partial Fourier data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Sweep the super-resolution factor; configs listing fewer than two
    /// factors get the default grid {2, 5, 10, 15, 20, 25, 30, 40, 50}.
    SweepF(RunArgs),
    /// Fit per-algorithm power-law exponents to a plot-data CSV.
    FitPla {
        /// Plot-data CSV with columns F, algorithm, median_error, q25, q75
        /// (an `algorithm` column is optional; without one the file is
        /// treated as a single series).
        #[arg(long = "in", value_name = "CSV")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Directory for results.csv, plot data, and run metadata.
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Override the config's trial count.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Worker thread count (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => execute(args, false),
        Command::SweepF(args) => execute(args, true),
        Command::FitPla { input } => fit_pla(input),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("{}", serde_json::json!({ "error": message }));
            ExitCode::FAILURE
        }
    }
}

fn execute(args: &RunArgs, sweep: bool) -> Result<(), String> {
    let mut cfg = ExperimentConfig::from_path(&args.config).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    // Overrides can invalidate a config that parsed fine (e.g. --trials 0).
    cfg.validate().map_err(|e| e.to_string())?;

    let run = || -> Result<ResultTable, String> {
        let result = if sweep {
            sweep_superresolution_factor(&cfg)
        } else {
            run_experiment(&cfg)
        };
        result.map_err(|e| e.to_string())
    };
    let table = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| format!("thread pool: {e}"))?
            .install(run)?,
        None => run()?,
    };

    let paths = emit_results(&table, &cfg, &args.out).map_err(|e| e.to_string())?;
    println!("{} result rows across {} files:", table.rows.len(), paths.len());
    for path in &paths {
        println!("  {}", path.display());
    }
    Ok(())
}

/// Fit `log(median_error) ~ α·log(F)` per algorithm and print the exponents
/// as a JSON object on stdout.
fn fit_pla(input: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| format!("{}: {e}", input.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| format!("{}: empty file", input.display()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| columns.iter().position(|c| *c == name);
    let f_col = col("F").ok_or("missing column `F`")?;
    let err_col = col("median_error").ok_or("missing column `median_error`")?;
    let alg_col = col("algorithm");

    let mut series: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let take = |c: usize| -> Result<f64, String> {
            fields
                .get(c)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| format!("line {}: bad number in column {c}", idx + 2))
        };
        let name = match alg_col {
            Some(c) => fields
                .get(c)
                .ok_or_else(|| format!("line {}: missing algorithm", idx + 2))?
                .to_string(),
            None => "all".to_string(),
        };
        let entry = series.entry(name).or_default();
        entry.0.push(take(err_col)?);
        entry.1.push(take(f_col)?);
    }
    if series.is_empty() {
        return Err(format!("{}: no data rows", input.display()));
    }

    let mut exponents = serde_json::Map::new();
    for (name, (errors, factors)) in &series {
        let alpha = estimate_pla_exponent(errors, factors)
            .map_err(|e| format!("series `{name}`: {e}"))?;
        exponents.insert(name.clone(), serde_json::json!(alpha));
    }
    println!("{}", serde_json::json!({ "exponents": exponents }));
    Ok(())
}
