//! Inputs → series → fit grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use wavefit::analysis::{
    excluded_from_fitting, is_low_count, model_for, peak_of_fit, raw_peak, span_window,
};
use wavefit::ingest::{check_str, combine_uk, load_str, LoadedTable};
use wavefit::transform::{
    align_monthly_to_weekly, aligned_monthly_deaths_due_to_covid, deaths_due_to_covid,
    national_deaths_due_to_covid, overlapping_months, proportion_of_covid_deaths,
    sum_of_place_ratios,
};
use wavefit::{
    fit_wave, AnalysisError, CellId, DeathTable, LmConfig, Measure, ModelKind, MonthlyTable,
    Nation, PeakDescriptor, Place, PlaceSel, ProportionSeries, SeriesKind, WaveFit, WaveWindow,
};

use crate::error::CliError;

/// Parsed tables keyed by nation and measure.
#[derive(Debug, Default)]
pub struct Inputs {
    pub weekly: BTreeMap<(Nation, Measure), DeathTable>,
    pub monthly: BTreeMap<(Nation, Measure), MonthlyTable>,
}

impl Inputs {
    fn weekly(&self, nation: Nation, measure: Measure) -> Option<&DeathTable> {
        self.weekly.get(&(nation, measure))
    }

    fn monthly(&self, nation: Nation, measure: Measure) -> Option<&MonthlyTable> {
        self.monthly.get(&(nation, measure))
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Every issue found in each file, in input order.
pub fn check_inputs(paths: &[PathBuf]) -> Result<Vec<(PathBuf, Vec<String>)>, CliError> {
    paths
        .iter()
        .map(|p| {
            let text = read_file(p)?;
            Ok((
                p.clone(),
                check_str(p, &text).iter().map(|e| e.to_string()).collect(),
            ))
        })
        .collect()
}

pub fn load_inputs(paths: &[PathBuf]) -> Result<Inputs, CliError> {
    let mut inputs = Inputs::default();
    for path in paths {
        let text = read_file(path)?;
        let invalid = |message: String| CliError::Invalid {
            path: path.clone(),
            message,
        };
        let (_, table) = load_str(path, &text).map_err(|e| invalid(e.to_string()))?;
        let key = (table.nation(), table.measure());
        let duplicate = match table {
            LoadedTable::Weekly(t) => inputs.weekly.insert(key, t).is_some(),
            LoadedTable::Monthly(t) => inputs.monthly.insert(key, t).is_some(),
        };
        if duplicate {
            return Err(invalid(format!(
                "second {} {} table of the same granularity",
                key.0, key.1
            )));
        }
    }
    Ok(inputs)
}

/// One fit target: a series, the model for it and the weekly COVID-19 counts
/// used for the low-count flag.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub series: ProportionSeries<f64>,
    pub covid_counts: Option<Vec<(i64, u64)>>,
}

#[derive(Debug, Default)]
pub struct SeriesSet {
    /// Deaths due to COVID-19, national first then per place, per nation.
    pub deaths: Vec<Dataset>,
    /// Shares of COVID-19 deaths per place, per nation.
    pub shares: Vec<Dataset>,
    /// Sums of per-place ratios, not fitted.
    pub diagnostics: Vec<ProportionSeries<f64>>,
}

impl SeriesSet {
    pub fn all_series(&self) -> Vec<ProportionSeries<f64>> {
        self.deaths
            .iter()
            .chain(&self.shares)
            .map(|d| d.series.clone())
            .collect()
    }
}

fn counts(table: &DeathTable, place: PlaceSel) -> Vec<(i64, u64)> {
    let values: Vec<u64> = match place {
        PlaceSel::All => table.week_totals(),
        PlaceSel::Place(p) => table.place_series(p).collect(),
    };
    table
        .weeks()
        .iter()
        .map(|w| w.ordinal)
        .zip(values)
        .collect()
}

fn common_range(a: &DeathTable, b: &DeathTable) -> Option<(DeathTable, DeathTable)> {
    let start = a.first_week().max(b.first_week());
    let end = a.last_week().min(b.last_week());
    Some((a.slice(start, end)?, b.slice(start, end)?))
}

fn weekly_sets(
    set: &mut SeriesSet,
    covid: &DeathTable,
    total: Option<&DeathTable>,
    shares_from: &DeathTable,
) -> Result<(), CliError> {
    let transform = |e: wavefit::TransformError| CliError::Fit(format!("{}: {e}", covid.nation()));
    if let Some(total) = total {
        if let Some((c, t)) = common_range(covid, total) {
            set.deaths.push(Dataset {
                series: national_deaths_due_to_covid(&c, &t).map_err(transform)?,
                covid_counts: Some(counts(&c, PlaceSel::All)),
            });
            for s in deaths_due_to_covid(&c, &t).map_err(transform)? {
                let place = s.place;
                set.deaths.push(Dataset {
                    series: s,
                    covid_counts: Some(counts(&c, place)),
                });
            }
            set.diagnostics
                .push(sum_of_place_ratios(&c, &t).map_err(transform)?);
        }
    }
    for s in proportion_of_covid_deaths(shares_from).map_err(transform)? {
        let place = s.place;
        set.shares.push(Dataset {
            series: s,
            covid_counts: Some(counts(shares_from, place)),
        });
    }
    Ok(())
}

/// Builds every series the inputs support.
///
/// The UK numerator for deaths due to COVID-19 excludes Northern Ireland so
/// that it covers the same nations as the all-cause denominator; the UK
/// shares of COVID-19 deaths include it. England and Wales are summed when no
/// combined England-and-Wales table is supplied.
pub fn build_series(inputs: &Inputs) -> Result<SeriesSet, CliError> {
    let mut set = SeriesSet::default();
    let uk_err = |e: wavefit::IngestError| CliError::Fit(format!("UK: {e}"));

    let combined_ew = |measure| -> Result<Option<DeathTable>, CliError> {
        if let Some(t) = inputs.weekly(Nation::EnglandAndWales, measure) {
            return Ok(Some(t.clone()));
        }
        match (
            inputs.weekly(Nation::England, measure),
            inputs.weekly(Nation::Wales, measure),
        ) {
            (Some(e), Some(w)) => Ok(Some(
                combine_uk(e, w, None)
                    .map_err(uk_err)?
                    .with_nation(Nation::EnglandAndWales),
            )),
            _ => Ok(None),
        }
    };
    let (ew_c, ew_t) = (
        combined_ew(Measure::CovidDeaths)?,
        combined_ew(Measure::TotalDeaths)?,
    );
    let sc_c = inputs.weekly(Nation::Scotland, Measure::CovidDeaths);
    let sc_t = inputs.weekly(Nation::Scotland, Measure::TotalDeaths);
    let ni_c = inputs.weekly(Nation::NorthernIreland, Measure::CovidDeaths);
    if let (Some(ew_c), Some(sc_c)) = (&ew_c, sc_c) {
        let deaths_numerator = combine_uk(ew_c, sc_c, None).map_err(uk_err)?;
        let shares_numerator = combine_uk(ew_c, sc_c, ni_c).map_err(uk_err)?;
        let total = match (&ew_t, sc_t) {
            (Some(ew_t), Some(sc_t)) => Some(combine_uk(ew_t, sc_t, None).map_err(uk_err)?),
            _ => None,
        };
        weekly_sets(
            &mut set,
            &deaths_numerator,
            total.as_ref(),
            &shares_numerator,
        )?;
    }

    for nation in [
        Nation::England,
        Nation::Scotland,
        Nation::Wales,
        Nation::EnglandAndWales,
    ] {
        if let Some(c) = inputs.weekly(nation, Measure::CovidDeaths) {
            weekly_sets(&mut set, c, inputs.weekly(nation, Measure::TotalDeaths), c)?;
        }
    }

    if let Some(ni_c) = ni_c {
        let ni_err = |e: wavefit::TransformError| CliError::Fit(format!("NorthernIreland: {e}"));
        if let (Some(mc), Some(mt)) = (
            inputs.monthly(Nation::NorthernIreland, Measure::CovidDeaths),
            inputs.monthly(Nation::NorthernIreland, Measure::TotalDeaths),
        ) {
            if let Some(months) = overlapping_months(mc, ni_c) {
                let alignment = align_monthly_to_weekly::<f64>(&months, ni_c).map_err(ni_err)?;
                let places = std::iter::once(PlaceSel::All).chain(Place::ALL.map(PlaceSel::Place));
                for place in places {
                    set.deaths.push(Dataset {
                        series: aligned_monthly_deaths_due_to_covid(mc, mt, &alignment, place)
                            .map_err(ni_err)?,
                        covid_counts: Some(counts(ni_c, place)),
                    });
                }
            }
        }
        for s in proportion_of_covid_deaths(ni_c).map_err(ni_err)? {
            let place = s.place;
            set.shares.push(Dataset {
                series: s,
                covid_counts: Some(counts(ni_c, place)),
            });
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Converged,
    NotConverged,
    InsufficientData,
    Excluded,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Converged => "converged",
            CellStatus::NotConverged => "not_converged",
            CellStatus::InsufficientData => "insufficient_data",
            CellStatus::Excluded => "excluded",
            CellStatus::Failed => "failed",
        }
    }

    /// Whether the cell makes the run a partial success.
    pub fn is_failure(self) -> bool {
        !matches!(self, CellStatus::Converged | CellStatus::Excluded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Peak weekly COVID-19 count in the window below ten.
    LowCount,
    /// Some in-window value exceeds 100%.
    Over100,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::LowCount => "low_count",
            Flag::Over100 => "over_100",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub id: CellId,
    pub model: ModelKind,
    pub window: WaveWindow,
    pub status: CellStatus,
    pub fit: Option<WaveFit<f64>>,
    pub peak: Option<PeakDescriptor<f64>>,
    pub raw_peak: Option<PeakDescriptor<f64>>,
    pub flags: Vec<Flag>,
    pub message: Option<String>,
}

impl CellOutcome {
    /// `<nation>_<place>_<wave>_<model>`.
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.id.nation, self.id.place, self.id.wave, self.model
        )
    }
}

struct Task<'a> {
    id: CellId,
    model: ModelKind,
    window: WaveWindow,
    data: &'a Dataset,
}

fn run_task(task: &Task<'_>, lm: &LmConfig<f64>) -> CellOutcome {
    let series = &task.data.series;
    let mut outcome = CellOutcome {
        id: task.id,
        model: task.model,
        window: task.window,
        status: CellStatus::Excluded,
        fit: None,
        peak: None,
        raw_peak: None,
        flags: Vec::new(),
        message: None,
    };
    if let Some(counts) = &task.data.covid_counts {
        let (s, e) = (task.window.start.ordinal, task.window.end.ordinal);
        let peak = counts
            .iter()
            .filter(|(o, _)| (s..=e).contains(o))
            .map(|c| c.1)
            .max();
        if peak.is_some_and(is_low_count) {
            outcome.flags.push(Flag::LowCount);
        }
    }
    if series
        .over_hundred()
        .iter()
        .any(|w| task.window.contains(*w))
    {
        outcome.flags.push(Flag::Over100);
    }
    if excluded_from_fitting(task.id.nation, task.id.place, task.id.kind) {
        outcome.message = Some("too few non-zero values to fit".into());
        return outcome;
    }
    match fit_wave(series, &task.window, task.model, lm) {
        Ok(fit) => {
            outcome.raw_peak = Some(raw_peak(&fit));
            match peak_of_fit(&fit) {
                Ok(p) => {
                    outcome.status = CellStatus::Converged;
                    outcome.peak = Some(p);
                }
                Err(_) => {
                    outcome.status = CellStatus::NotConverged;
                    outcome.message = Some(format!("stopped with {:?}", fit.fit.termination));
                }
            }
            outcome.fit = Some(fit);
        }
        Err(e) => {
            outcome.status = match e {
                AnalysisError::InsufficientData { .. } => CellStatus::InsufficientData,
                _ => CellStatus::Failed,
            };
            outcome.message = Some(e.to_string());
        }
    }
    outcome
}

/// Fits every cell accepted by `keep`, in parallel, returning outcomes in a
/// fixed order: deaths due to COVID-19 by series then wave, then shares.
pub fn fit_grid(
    set: &SeriesSet,
    waves: &[WaveWindow],
    lm: &LmConfig<f64>,
    keep: impl Fn(&CellId) -> bool,
) -> Vec<CellOutcome> {
    let full = span_window(waves).expect("at least one wave");
    let mut tasks = Vec::new();
    for data in &set.deaths {
        for w in waves {
            tasks.push(Task {
                id: cell_id(&data.series, w),
                model: model_of(&data.series),
                window: *w,
                data,
            });
        }
    }
    for data in &set.shares {
        tasks.push(Task {
            id: cell_id(&data.series, &full),
            model: model_of(&data.series),
            window: full,
            data,
        });
    }
    tasks.retain(|t| keep(&t.id));
    tasks.par_iter().map(|t| run_task(t, lm)).collect()
}

fn cell_id(series: &ProportionSeries<f64>, window: &WaveWindow) -> CellId {
    CellId {
        nation: series.nation,
        place: series.place,
        kind: series.kind,
        wave: window.label,
    }
}

fn model_of(series: &ProportionSeries<f64>) -> ModelKind {
    model_for(series.kind, series.place)
}

/// Whether a cell enters the β-sign table.
pub fn is_weibull_cell(id: &CellId) -> bool {
    id.kind == SeriesKind::DeathsDueToCovid
}
