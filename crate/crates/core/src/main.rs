use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deltacode::degree::DegreeTable;
use deltacode::experiment::{emit_results, execute, write_results, ExperimentFile, PlannedRun};

#[derive(Parser)]
#[command(name = "deltacode", version, about = "Delay-constrained XOR coding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the base configuration (every listed scheme and replicate).
    Run {
        config: PathBuf,
        /// Write CSV here instead of the file's `output` (or stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the sweep described by the file's `axis` and `values`.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the degree look-up table as CSV.
    DegreeTable {
        #[arg(long, default_value_t = 16)]
        qmax: u64,
    },
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> deltacode::Result<()> {
    match cmd {
        Command::Run { config, output } => {
            let exp = ExperimentFile::load(&config)?;
            let plan = exp.plan_single()?;
            finish(&exp, &plan, output)
        }
        Command::Sweep { config, output } => {
            let exp = ExperimentFile::load(&config)?;
            let plan = exp.plan_sweep()?;
            finish(&exp, &plan, output)
        }
        Command::DegreeTable { qmax } => {
            let table = DegreeTable::build(qmax)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            writeln!(out, "x,y,d")?;
            for (x, y, d) in table.rows() {
                writeln!(out, "{x},{y},{d}")?;
            }
            Ok(())
        }
        Command::Validate { config } => {
            let exp = ExperimentFile::load(&config)?;
            exp.validate()?;
            println!("{}: ok", config.display());
            Ok(())
        }
    }
}

fn finish(exp: &ExperimentFile, plan: &[PlannedRun], output: Option<PathBuf>) -> deltacode::Result<()> {
    let rows = execute(plan)?;
    for row in rows.iter().filter(|r| r.metrics.hit_cap) {
        eprintln!(
            "note: {} replicate {} stopped at the interval cap with {} failures",
            row.metrics.scheme, row.replicate, row.metrics.failures
        );
    }
    match output.or_else(|| exp.output.clone()) {
        Some(path) => emit_results(&rows, Path::new(&path)),
        None => write_results(&rows, std::io::stdout().lock()),
    }
}
