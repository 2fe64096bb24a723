//! `wavefit` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavefit::{parse_wave_spec, Nation};
use wavefit_cli::error::EXIT_VALIDATION;
use wavefit_cli::report::{print, render};
use wavefit_cli::{cmd_compare, cmd_fit, cmd_validate, CliError, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "wavefit", version)]
#[command(about = "Fit COVID-19 mortality waves by place of death")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check input files against the schema
    Validate {
        /// Input CSV file (repeatable).
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Fit every nation × place × wave cell and write reports
    Fit {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare national peaks across nations
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Nations to compare, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        nations: Vec<Nation>,
        /// Nation lags and differences are measured against; defaults to the first.
        #[arg(long)]
        reference: Option<Nation>,
        /// Also write `compare.<ext>` into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Input CSV file (repeatable).
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Wave windows, e.g. `2020w10:2020w38,2020w38:2020w51,2020w51:2021w08`.
    #[arg(long)]
    waves: Option<String>,
    /// Iteration cap for each fit.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative step tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Report format (repeatable); defaults to all.
    #[arg(long = "format", value_enum)]
    formats: Vec<Format>,
}

impl RunArgs {
    fn config(self, out: PathBuf) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::new(self.inputs, out);
        if let Some(spec) = self.waves {
            config.waves = parse_wave_spec(&spec).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(n) = self.max_iter {
            config.lm.max_iterations = n;
        }
        if let Some(tol) = self.tol {
            config.lm.step_tolerance = tol;
        }
        if !self.formats.is_empty() {
            let mut formats = self.formats;
            formats.sort();
            formats.dedup();
            config.formats = formats;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Validate { inputs } => {
            let report = cmd_validate(&inputs)?;
            print(&report.render())?;
            if report.is_valid() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} issue(s) found", report.issue_count());
                Ok(ExitCode::from(EXIT_VALIDATION))
            }
        }
        Command::Fit { run, out } => {
            let summary = cmd_fit(&run.config(out)?)?;
            for (cell, status, message) in &summary.failures {
                eprintln!("{cell}: {} ({message})", status.as_str());
            }
            summary.into_result()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            run,
            nations,
            reference,
            out,
        } => {
            let config = run.config(out.clone().unwrap_or_default())?;
            let format = config
                .formats
                .first()
                .copied()
                .filter(|_| config.formats.len() == 1)
                .unwrap_or(Format::Md);
            let rows = cmd_compare(&config, &nations, reference.unwrap_or(nations[0]))?;
            let text = render(&rows, format);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                let path = dir.join(format!("compare.{}", format.extension()));
                std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
            }
            print(&text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
