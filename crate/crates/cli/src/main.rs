use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polent_harness::config::{self, GridSpec, LoadedConfig};
use polent_harness::error::{HarnessError, HarnessResult};
use polent_harness::table::ResultTable;
use polent_harness::{oracle, plots, scenario, sweep, verify};

/// Verbosity is read from POLENT_LOG (error, warn, info, debug, trace).
const LOG_ENV: &str = "POLENT_LOG";

#[derive(Parser)]
#[command(name = "polent", version, about = "Two-beam polarisation entanglement model runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in a config file.
    Run { config: PathBuf },
    /// Sweep one parameter of a config over a grid.
    Sweep {
        config: PathBuf,
        /// One of t, v_asq, angle_error, efficiency, visibility, gain.
        #[arg(long)]
        axis: String,
        /// `start:stop:points` or a comma-separated list.
        #[arg(long)]
        grid: String,
    },
    /// Commutator, coherent-state and Monte Carlo checks for a config.
    Oracle { config: PathBuf },
    /// Run the acceptance criteria.
    Verify,
    /// Write per-series plot data from a results JSON file.
    EmitPlots { results: PathBuf, outdir: PathBuf },
}

fn write_table(loaded: &LoadedConfig, table: &ResultTable, stem: &str) -> HarnessResult<()> {
    let out = &loaded.config.output;
    let (csv, json) = table.write(&out.dir, stem)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn plot_dir(loaded: &LoadedConfig, stem: &str) -> PathBuf {
    loaded.config.output.dir.join(format!("{stem}_plots"))
}

fn run(cmd: Command) -> HarnessResult<()> {
    match cmd {
        Command::Run { config } => {
            let loaded = config::load(&config)?;
            let table = scenario::run_scenario(&loaded)?;
            let stem = loaded.config.output.stem.clone();
            write_table(&loaded, &table, &stem)?;
            if table.metadata.axis.is_some() {
                plots::emit_plots(&table, &plot_dir(&loaded, &stem))?;
            }
        }
        Command::Sweep { config, axis, grid } => {
            let loaded = config::load(&config)?;
            let grid = GridSpec::parse(&grid)?.values();
            let table = sweep::run_sweep(&loaded, &axis, &grid)?;
            let stem = format!("{}_sweep_{axis}", loaded.config.output.stem);
            write_table(&loaded, &table, &stem)?;
            plots::emit_plots(&table, &plot_dir(&loaded, &stem))?;
        }
        Command::Oracle { config } => {
            let loaded = config::load(&config)?;
            let (table, failed) = oracle::run_oracles(&loaded)?;
            write_table(&loaded, &table, &format!("{}_oracle", loaded.config.output.stem))?;
            if !failed.is_empty() {
                return Err(HarnessError::Oracle(failed.join("; ")));
            }
        }
        Command::Verify => {
            let outcomes = verify::run_all();
            for o in &outcomes {
                println!("{o}");
            }
            let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
            if !failed.is_empty() {
                return Err(HarnessError::Acceptance(format!("criteria {} failed", failed.join(", "))));
            }
        }
        Command::EmitPlots { results, outdir } => {
            for p in plots::emit_plots_from_file(Path::new(&results), &outdir)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
