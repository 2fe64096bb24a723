use std::path::PathBuf;

use serde::Serialize;
use wavefit::{peak_lag, Nation, PlaceSel, SeriesKind};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::pipeline::{build_series, check_inputs, fit_grid, load_inputs, CellStatus};
use crate::report::{write_outputs, TableRow};

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub files: Vec<(PathBuf, Vec<String>)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.files.iter().all(|(_, issues)| issues.is_empty())
    }

    pub fn issue_count(&self) -> usize {
        self.files.iter().map(|(_, i)| i.len()).sum()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (path, issues) in &self.files {
            if issues.is_empty() {
                s += &format!("{}: ok\n", path.display());
            }
            for issue in issues {
                s += &format!("{}: {issue}\n", path.display());
            }
        }
        s
    }
}

/// Schema and consistency checks for each file.
pub fn cmd_validate(inputs: &[PathBuf]) -> Result<ValidationReport, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Config("at least one --input is required".into()));
    }
    Ok(ValidationReport {
        files: check_inputs(inputs)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub cells: usize,
    /// `(cell, status, message)` for cells that failed or did not converge.
    pub failures: Vec<(String, CellStatus, String)>,
}

impl FitSummary {
    pub fn into_result(self) -> Result<Self, CliError> {
        if self.failures.is_empty() {
            Ok(self)
        } else {
            Err(CliError::Partial {
                failed: self.failures.len(),
                total: self.cells,
            })
        }
    }
}

/// Runs the full pipeline and writes the output tree. Failed cells do not
/// abort the run; they are listed in the summary and quarantined.
pub fn cmd_fit(config: &RunConfig) -> Result<FitSummary, CliError> {
    config.validate()?;
    let inputs = load_inputs(&config.inputs)?;
    let set = build_series(&inputs)?;
    let outcomes = fit_grid(&set, &config.waves, &config.lm, |_| true);
    write_outputs(config, &set, &outcomes)?;
    let failures = outcomes
        .iter()
        .filter(|o| o.status.is_failure())
        .map(|o| {
            (
                o.id.to_string(),
                o.status,
                o.message.clone().unwrap_or_default(),
            )
        })
        .collect();
    Ok(FitSummary {
        cells: outcomes.len(),
        failures,
    })
}

/// One nation's national peak in one wave, against the reference nation.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub wave: String,
    pub nation: String,
    pub peak_t: f64,
    pub peak_week: String,
    pub peak_value: f64,
    /// Weeks after the reference nation's peak; negative means earlier.
    pub lag_weeks: f64,
    /// Absolute difference in percentage points from the reference peak.
    pub difference_pp: f64,
}

impl TableRow for CompareRow {
    const HEADER: &'static [&'static str] = &[
        "wave",
        "nation",
        "peak_t",
        "peak_week",
        "peak_value",
        "lag_weeks",
        "difference_pp",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.wave.clone(),
            self.nation.clone(),
            self.peak_t.to_string(),
            self.peak_week.clone(),
            self.peak_value.to_string(),
            self.lag_weeks.to_string(),
            self.difference_pp.to_string(),
        ]
    }
}

/// Fits national deaths-due-to-COVID-19 curves for `nations` and compares
/// each wave's peak to the `reference` nation's.
pub fn cmd_compare(
    config: &RunConfig,
    nations: &[Nation],
    reference: Nation,
) -> Result<Vec<CompareRow>, CliError> {
    config.validate()?;
    let mut wanted = nations.to_vec();
    if !wanted.contains(&reference) {
        wanted.insert(0, reference);
    }
    let inputs = load_inputs(&config.inputs)?;
    let set = build_series(&inputs)?;
    let outcomes = fit_grid(&set, &config.waves, &config.lm, |id| {
        id.kind == SeriesKind::DeathsDueToCovid
            && id.place == PlaceSel::All
            && wanted.contains(&id.nation)
    });
    let mut rows = Vec::new();
    for w in &config.waves {
        let peak = |n: Nation| {
            let o = outcomes
                .iter()
                .find(|o| o.id.nation == n && o.id.wave == w.label)
                .ok_or_else(|| CliError::Config(format!("no national deaths series for {n}")))?;
            o.peak.ok_or_else(|| {
                CliError::Fit(format!(
                    "{}: {}",
                    o.id,
                    o.message
                        .clone()
                        .unwrap_or_else(|| o.status.as_str().into())
                ))
            })
        };
        let base = peak(reference)?;
        for &n in &wanted {
            let p = peak(n)?;
            rows.push(CompareRow {
                wave: w.label.to_string(),
                nation: n.to_string(),
                peak_t: p.ordinal,
                peak_week: p.week.to_string(),
                peak_value: p.magnitude,
                lag_weeks: peak_lag(&base, &p).map_err(|e| CliError::Fit(e.to_string()))?,
                difference_pp: p.magnitude - base.magnitude,
            });
        }
    }
    Ok(rows)
}
