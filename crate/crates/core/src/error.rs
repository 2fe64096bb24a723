use thiserror::Error;

use crate::types::{Measure, Nation, Place};
use crate::week::{WeekIndex, YearMonth};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeekError {
    #[error("week {iso_week} does not exist in ISO year {iso_year}")]
    InvalidWeek { iso_year: i32, iso_week: u32 },
    #[error("invalid calendar month {year}-{month}")]
    InvalidMonth { year: i32, month: u32 },
    #[error("cannot parse week `{0}` (expected e.g. 2020w10)")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("table has no time points")]
    Empty,
    #[error("{weeks} time labels but {columns} count columns")]
    DimensionMismatch { weeks: usize, columns: usize },
    #[error("week sequence has a gap: expected {expected}, found {found}")]
    WeekGap {
        expected: WeekIndex,
        found: WeekIndex,
    },
    #[error("month sequence has a gap: expected {expected}, found {found}")]
    MonthGap {
        expected: YearMonth,
        found: YearMonth,
    },
    #[error("{0} is a derived aggregate and cannot be ingested from raw rows")]
    DerivedNation(Nation),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: column `{column}`: {message}")]
    Field {
        row: usize,
        column: &'static str,
        message: String,
    },
    #[error("row {row}, column `count`: `{value}` is not a non-negative integer")]
    NonIntegerCount { row: usize, value: String },
    #[error("row {row}, column `count`: negative count {value}")]
    NegativeCount { row: usize, value: i64 },
    #[error("row {row}: duplicate entry for {place} in {week}")]
    Duplicate {
        row: usize,
        week: WeekIndex,
        place: Place,
    },
    #[error("row {row}: duplicate entry for {place} in {month}")]
    DuplicateMonth {
        row: usize,
        month: YearMonth,
        place: Place,
    },
    #[error("duplicate health-board entry ({board}, {place}, {week})")]
    DuplicateBoard {
        board: String,
        place: Place,
        week: WeekIndex,
    },
    #[error("gap in week sequence: {missing} is missing")]
    Gap { missing: WeekIndex },
    #[error("gap in month sequence: {missing} is missing")]
    MonthGap { missing: YearMonth },
    #[error("missing count for {place} in {week}")]
    MissingCell { week: WeekIndex, place: Place },
    #[error("missing count for {place} in {month}")]
    MissingMonthCell { month: YearMonth, place: Place },
    #[error("unrecognised {agency} place label `{label}`; valid labels: {}", valid.join(", "))]
    UnknownPlace {
        agency: String,
        label: String,
        valid: Vec<String>,
    },
    #[error("row {row}: `{column}` changes within one file (`{first}` then `{found}`)")]
    Mixed {
        row: usize,
        column: &'static str,
        first: String,
        found: String,
    },
    #[error("file has no data rows")]
    Empty,
    #[error("weekly all-cause totals are not published by NISRA; supply them monthly")]
    NisraWeeklyTotals,
    #[error("cannot combine {0} with {1}")]
    MeasureMismatch(Measure, Measure),
    #[error("tables have no weeks in common")]
    EmptyIntersection,
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("nation mismatch: {0} vs {1}")]
    NationMismatch(Nation, Nation),
    #[error("week ranges differ between the COVID-19 and all-cause tables")]
    WeekRangeMismatch,
    #[error("expected a {expected} table, got {found}")]
    MeasureMismatch { expected: Measure, found: Measure },
    #[error("no weekly data overlaps month {0}")]
    NoWeeklyOverlap(YearMonth),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` is not finite ({value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("model output is not finite at the initial parameters")]
    NonFiniteStart,
    #[error("initial parameters lie outside the model domain")]
    InfeasibleStart,
    #[error("damped normal equations are singular even at maximal damping")]
    Singular,
    #[error("invalid optimiser configuration: {0}")]
    InvalidConfig(String),
    #[error("data has zero variance; R² is undefined")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{defined} defined points in window, need at least {needed}")]
    InsufficientData { defined: usize, needed: usize },
    #[error("fit did not converge")]
    NotConverged,
    #[error("cannot compare peaks from {0} and {1}")]
    CrossWave(String, String),
    #[error("duplicate cell {0}")]
    DuplicateCell(String),
    #[error("window end {end} precedes start {start}")]
    InvalidWindow { start: WeekIndex, end: WeekIndex },
    #[error("cannot parse wave spec `{0}`")]
    WaveSpec(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Week(#[from] WeekError),
}

/// Union of all library errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Week(#[from] WeekError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
