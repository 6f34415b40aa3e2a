use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use landau_lab::io::{cmd_diagnose, cmd_experiment, cmd_simulate, format_table, parse_config};
use landau_lab::{Error, Result};

/// Space-homogeneous Landau equation simulator and diagnostics.
#[derive(Parser)]
#[command(name = "landau-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial data and write time series and snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiments listed in the configuration.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate functionals on stored snapshots.
    Diagnose {
        /// Sidecar of the density `f`.
        #[arg(long)]
        f: PathBuf,
        /// Sidecar of the reference density `g`, for pair functionals.
        #[arg(long)]
        g: Option<PathBuf>,
        /// Comma-separated functional names; all applicable ones by default.
        #[arg(long, value_delimiter = ',')]
        functionals: Vec<String>,
        /// Accepted for symmetry with the other commands; only checked.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write `diagnose.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("LANDAU_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("LANDAU_LAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = parse_config(&config)?;
            let res = cmd_simulate(&cfg, out.as_deref())?;
            println!(
                "wrote {} rows and {} snapshots to {}",
                res.rows.len(),
                res.snapshots.len(),
                res.dir.display()
            );
        }
        Command::Experiment { config, out } => {
            let cfg = parse_config(&config)?;
            for (name, pass) in cmd_experiment(&cfg, out.as_deref())? {
                println!("{name}: {}", if pass { "pass" } else { "FAIL" });
            }
        }
        Command::Diagnose { f, g, functionals, config, out } => {
            if let Some(path) = config {
                parse_config(&path)?;
            }
            let rows = cmd_diagnose(&f, g.as_deref(), &functionals, out.as_deref())?;
            print!("{}", format_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
