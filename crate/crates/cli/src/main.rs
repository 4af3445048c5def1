use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zipflab_cli::commands::{self, SolveOptions};
use zipflab_cli::scenario::{load_scenario, Overrides};
use zipflab_cli::{CliError, CliResult};

/// Firm-size economies under proportional growth: simulation, stationary
/// densities and tail estimation.
#[derive(Parser)]
#[command(name = "zipflab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Economy config or scenario (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the economy; writes sizes_final.csv, flows.csv, lifespans.csv, summary.json.
    Simulate(RunArgs),
    /// Stationary density; writes density.csv and theory.json.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Grid cells.
        #[arg(long, default_value_t = 4096)]
        grid_n: usize,
        /// Upper end of the grid (default: 1e6 times the entry size).
        #[arg(long)]
        s_max: Option<f64>,
    },
    /// Tail fits of a size sample; writes tailfit.json and ccdf.csv.
    Estimate {
        /// CSV of sizes with a header row.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Order statistics used (default: ceil(n^0.6), at most n/10).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run a scenario's parameter sweep; writes sweep.csv.
    Sweep(RunArgs),
}

fn load(run: &RunArgs) -> CliResult<zipflab_cli::scenario::Scenario> {
    let mut scenario = load_scenario(&run.config)?;
    Overrides {
        seed: run.seed,
        replicas: run.replicas,
        dt: run.dt,
    }
    .apply(&mut scenario.config);
    Ok(scenario)
}

fn dispatch(command: Command) -> (bool, CliResult<Vec<PathBuf>>) {
    match command {
        Command::Simulate(run) => (
            run.quiet,
            load(&run).and_then(|s| commands::simulate(&s.config, &run.out)),
        ),
        Command::Solve { run, grid_n, s_max } => (
            run.quiet,
            load(&run).and_then(|s| {
                commands::solve(&s.config, SolveOptions { n: grid_n, s_max }, &run.out)
            }),
        ),
        Command::Estimate {
            input,
            out,
            k,
            quiet,
        } => (quiet, commands::estimate(&input, k, &out)),
        Command::Sweep(run) => (
            run.quiet,
            load(&run).and_then(|s| match &s.sweep {
                Some(sweep) => commands::sweep(&s.config, sweep, &run.out),
                None => Err(CliError::input(format!(
                    "{}: scenario has no `sweep` section",
                    run.config.display()
                ))),
            }),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (quiet, outcome) = dispatch(cli.command);
    match outcome {
        Ok(files) => {
            if !quiet {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
