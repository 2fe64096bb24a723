use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use wavefit::{default_wave_windows, LmConfig, WaveWindow};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Md => "md",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub waves: Vec<WaveWindow>,
    pub lm: LmConfig<f64>,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            inputs,
            waves: default_wave_windows(),
            lm: LmConfig::default(),
            out: out.into(),
            formats: vec![Format::Csv, Format::Json, Format::Md],
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.inputs.is_empty() {
            return Err(CliError::Config("at least one --input is required".into()));
        }
        if self.waves.is_empty() {
            return Err(CliError::Config("no wave windows".into()));
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("no output format".into()));
        }
        self.lm
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}
