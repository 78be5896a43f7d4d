use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qudit_threshold::bounds::{BoundReport, BoundTable};
use qudit_threshold::campaign::{self, AnalysisOptions, CampaignConfig, ResultStore};
use qudit_threshold::Error;

#[derive(Parser)]
#[command(name = "qudit-threshold", version, about = "Error thresholds of Z_d quantum double codes via disordered Potts models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation campaign described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "store")]
        store: PathBuf,
    },
    /// Finite-size scaling analysis of a store.
    Analyze {
        #[arg(long)]
        store: PathBuf,
        /// Only analyse these error rates.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = campaign::analysis::DEFAULT_RESAMPLES)]
        resamples: usize,
        /// Bootstrap seed; defaults to the campaign seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for plot data; defaults to the store.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the analysis as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Hashing, upper and lower bounds for the given dimensions.
    Bounds {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,10")]
        d: Vec<u64>,
    },
    /// Compare Monte Carlo against exact enumeration on a tiny lattice.
    Verify {
        #[arg(long)]
        d: usize,
        #[arg(long = "L")]
        size: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1 << 16)]
        sweeps: u64,
        /// Largest accepted |z| score.
        #[arg(long, default_value_t = 3.0)]
        z_limit: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::OutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::InfiniteBeta
        | Error::StateSpaceTooLarge(_)
        | Error::Config(_) => 2,
        Error::Io(_) | Error::Json(_) | Error::Store(_) => 3,
        Error::Diverged | Error::Unphysical { .. } | Error::NoCrossing | Error::BracketFailure { .. } => 4,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate { config, store } => {
            let cfg = CampaignConfig::load(&config)?;
            let groups = campaign::run_campaign(&cfg, &store, |g| {
                eprintln!(
                    "p = {} L = {}: {} samples, {} failed runs, {} excluded, equilibration {:?}",
                    g.p, g.size, g.samples, g.failed_runs, g.excluded, g.verdict
                );
            })?;
            let failed: usize = groups.iter().map(|g| g.failed_runs).sum();
            println!("wrote {} groups to {}", groups.len(), store.display());
            if failed > 0 {
                eprintln!("{failed} samples failed; see records.jsonl");
            }
        }
        Command::Analyze {
            store,
            p_grid,
            resamples,
            seed,
            out,
            json,
        } => {
            let data = ResultStore::load(&store)?;
            let analysis = campaign::analyze(
                &data,
                &AnalysisOptions {
                    resamples,
                    seed,
                    p_grid,
                },
            );
            if json {
                println!("{}", serde_json::to_string_pretty(&analysis)?);
            } else {
                print!("{analysis}");
            }
            let files = analysis.write_plot_data(out.as_deref().unwrap_or(&store))?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Bounds { d } => {
            let reports = d.iter().map(|&d| BoundReport::new(d)).collect::<Result<Vec<_>, _>>()?;
            print!("{}", BoundTable(&reports));
        }
        Command::Verify {
            d,
            size,
            p,
            beta,
            seed,
            sweeps,
            z_limit,
        } => {
            let report = campaign::verify_bruteforce(d, size, p, beta, seed, sweeps)?;
            print!("{report}");
            if !report.passed(z_limit) {
                eprintln!("max |z| = {:.3} exceeds {z_limit}", report.max_abs_z());
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
