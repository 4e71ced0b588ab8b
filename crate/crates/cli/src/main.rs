use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eberhard_cli::{run, CliError, CliOverrides, RunConfig, Scenario, EXIT_FAILURE, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "eberhard", about = "Optimize and tabulate Eberhard-inequality violations")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Result CSV; stdout when neither this nor `output` in the config is set.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Long-format plot-data CSV.
    #[arg(long, global = true, value_name = "PATH")]
    plot_data: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Gauss-Legendre order per angle for the fluctuation scenario.
    #[arg(long, global = true, value_name = "N")]
    quad_order: Option<usize>,
    /// Significant digits in the CSV output.
    #[arg(long, global = true, value_name = "N")]
    precision: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Equal-efficiency optimum for each η.
    SweepEta,
    /// Optimum and largest tolerable background over an (η₁, η₂) grid.
    SweepEtaPair,
    /// Count-model J at given angles, optimized, and with the detectors exchanged.
    Vienna,
    /// Optima under uniform random errors of the four analyzer angles.
    Fluctuation,
    /// Check that each optimal state is a zero-dispersion minimal eigenvector.
    VerifyEigen,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::SweepEta => Scenario::SweepEta,
            Command::SweepEtaPair => Scenario::SweepEtaPair,
            Command::Vienna => Scenario::Vienna,
            Command::Fluctuation => Scenario::Fluctuation,
            Command::VerifyEigen => Scenario::VerifyEigen,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let path = args.config.as_deref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(path)?;
    config.apply(&CliOverrides {
        output: args.out.clone(),
        plot_data: args.plot_data.clone(),
        seed: args.seed,
        quad_order: args.quad_order,
        precision: args.precision,
    });
    let outcome = run(args.command.into(), &config)?;
    let precision = config.precision();
    match &config.output {
        Some(p) => outcome.table.write_csv(create(p)?, precision)?,
        None => outcome.table.write_csv(io::stdout().lock(), precision)?,
    }
    if let Some(p) = &config.plot_data {
        outcome.table.write_plot_data(create(p)?, precision)?;
    }
    for f in &outcome.failures {
        eprintln!("FAILED: {f}");
    }
    io::stdout().flush()?;
    Ok(if outcome.success() { EXIT_OK } else { EXIT_FAILURE })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = execute(&args).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
