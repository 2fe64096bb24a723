//! CSV ingestion for the canonical weekly and monthly schemas, health-board
//! aggregation, agency label mapping and the UK composite.
//!
//! Weekly files use the header `nation,measure,iso_year,iso_week,place,count`,
//! monthly files `nation,measure,year,month,place,count`. Health-board files
//! insert a `board` column before `place` and carry the agency's own place
//! labels, which are mapped onto [`Place`] before summing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{IngestError, TableError};
use crate::types::{DeathTable, Measure, MonthlyTable, Nation, Place, PLACE_COUNT};
use crate::week::{WeekIndex, YearMonth};

pub const WEEKLY_HEADER: [&str; 6] = [
    "nation", "measure", "iso_year", "iso_week", "place", "count",
];
pub const MONTHLY_HEADER: [&str; 6] = ["nation", "measure", "year", "month", "place", "count"];
pub const BOARD_HEADER: [&str; 7] = [
    "nation", "measure", "iso_year", "iso_week", "board", "place", "count",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Agency {
    #[serde(rename = "ONS")]
    Ons,
    #[serde(rename = "NRS")]
    Nrs,
    #[serde(rename = "NISRA")]
    Nisra,
}

impl Agency {
    pub fn for_nation(nation: Nation) -> Self {
        match nation {
            Nation::Scotland => Agency::Nrs,
            Nation::NorthernIreland => Agency::Nisra,
            _ => Agency::Ons,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Agency::Ons => "ONS",
            Agency::Nrs => "NRS",
            Agency::Nisra => "NISRA",
        }
    }

    fn labels(self) -> &'static [(&'static str, Place)] {
        match self {
            Agency::Ons => &[
                ("Home", Place::Home),
                ("Hospital", Place::Hospital),
                ("Hospice", Place::Hospice),
                ("Care Home", Place::CareHome),
                ("Other communal establishment", Place::Oce),
                ("Elsewhere", Place::Elsewhere),
            ],
            Agency::Nrs => &[
                ("Care Home", Place::CareHome),
                ("Home / Non-institution", Place::Home),
                ("Hospital", Place::Hospital),
                ("Other institutions", Place::Oce),
            ],
            Agency::Nisra => &[
                ("Hospital", Place::Hospital),
                ("Care Home", Place::CareHome),
                ("Hospice", Place::Hospice),
                ("Home", Place::Home),
                ("Other", Place::Elsewhere),
            ],
        }
    }
}

impl fmt::Display for Agency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Granularity {
    Weekly,
    Monthly,
}

/// Where a table comes from and what it must contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpec {
    pub agency: Agency,
    pub path: PathBuf,
    pub measure: Measure,
    pub granularity: Granularity,
}

impl SourceSpec {
    pub fn new(
        agency: Agency,
        path: impl Into<PathBuf>,
        measure: Measure,
        granularity: Granularity,
    ) -> Result<Self, IngestError> {
        if agency == Agency::Nisra
            && measure == Measure::TotalDeaths
            && granularity == Granularity::Weekly
        {
            return Err(IngestError::NisraWeeklyTotals);
        }
        Ok(Self {
            agency,
            path: path.into(),
            measure,
            granularity,
        })
    }
}

/// Maps an agency place label onto [`Place`].
///
/// The canonical spellings (`CareHome`, `OCE`, ...) are accepted for every
/// agency; otherwise the label must be one the agency publishes.
pub fn map_place_labels(agency: Agency, raw_label: &str) -> Result<Place, IngestError> {
    if let Ok(p) = raw_label.parse::<Place>() {
        return Ok(p);
    }
    agency
        .labels()
        .iter()
        .find(|(label, _)| *label == raw_label)
        .map(|(_, p)| *p)
        .ok_or_else(|| IngestError::UnknownPlace {
            agency: agency.to_string(),
            label: raw_label.to_string(),
            valid: agency
                .labels()
                .iter()
                .map(|(l, _)| (*l).to_string())
                .collect(),
        })
}

/// One health-board row after label mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardRow {
    pub board: String,
    pub place: Place,
    pub week: WeekIndex,
    pub count: u64,
}

/// Sums health-board rows per `(place, week)`.
///
/// A place that no row mentions is a category the agency does not publish and
/// is filled with zeros; a place that is reported for some weeks but not for
/// others is a missing cell.
pub fn aggregate_health_boards(
    nation: Nation,
    measure: Measure,
    rows: &[BoardRow],
) -> Result<DeathTable, IngestError> {
    if rows.is_empty() {
        return Err(IngestError::Empty);
    }
    let mut seen = BTreeSet::new();
    let mut sums: BTreeMap<(WeekIndex, Place), u64> = BTreeMap::new();
    for r in rows {
        if !seen.insert((r.board.as_str(), r.place, r.week)) {
            return Err(IngestError::DuplicateBoard {
                board: r.board.clone(),
                place: r.place,
                week: r.week,
            });
        }
        *sums.entry((r.week, r.place)).or_default() += r.count;
    }
    let reported: BTreeSet<Place> = rows.iter().map(|r| r.place).collect();
    let weeks: BTreeSet<WeekIndex> = rows.iter().map(|r| r.week).collect();
    let weeks = contiguous_weeks(&weeks)?;
    let mut columns = Vec::with_capacity(weeks.len());
    for &week in &weeks {
        let mut col = [0u64; PLACE_COUNT];
        for place in reported.iter().copied() {
            col[place.index()] = *sums
                .get(&(week, place))
                .ok_or(IngestError::MissingCell { week, place })?;
        }
        columns.push(col);
    }
    Ok(DeathTable::new(nation, measure, weeks, columns)?)
}

fn contiguous_weeks(weeks: &BTreeSet<WeekIndex>) -> Result<Vec<WeekIndex>, IngestError> {
    let out: Vec<WeekIndex> = weeks.iter().copied().collect();
    for pair in out.windows(2) {
        if pair[1] != pair[0].succ() {
            return Err(IngestError::Gap {
                missing: pair[0].succ(),
            });
        }
    }
    Ok(out)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), IngestError> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(IngestError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn reader<R: Read>(content: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(content)
}

fn row_number(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn parse_count(row: usize, raw: &str) -> Result<u64, IngestError> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    match raw.parse::<i64>() {
        Ok(v) if v < 0 => Err(IngestError::NegativeCount { row, value: v }),
        _ => Err(IngestError::NonIntegerCount {
            row,
            value: raw.to_string(),
        }),
    }
}

fn field<T: std::str::FromStr>(
    row: usize,
    column: &'static str,
    raw: &str,
) -> Result<T, IngestError>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| IngestError::Field {
        row,
        column,
        message: e.to_string(),
    })
}

/// Tracks the nation/measure columns, which must be constant in one file.
#[derive(Default)]
struct FileIdentity {
    nation: Option<Nation>,
    measure: Option<Measure>,
}

impl FileIdentity {
    fn observe(&mut self, row: usize, nation: Nation, measure: Measure) -> Result<(), IngestError> {
        match self.nation {
            Some(n) if n != nation => {
                return Err(IngestError::Mixed {
                    row,
                    column: "nation",
                    first: n.to_string(),
                    found: nation.to_string(),
                })
            }
            _ => self.nation = Some(nation),
        }
        match self.measure {
            Some(m) if m != measure => Err(IngestError::Mixed {
                row,
                column: "measure",
                first: m.to_string(),
                found: measure.to_string(),
            }),
            _ => {
                self.measure = Some(measure);
                Ok(())
            }
        }
    }
}

fn check_nation(row: usize, nation: Nation) -> Result<(), IngestError> {
    if nation.is_derived() {
        return Err(IngestError::Field {
            row,
            column: "nation",
            message: TableError::DerivedNation(nation).to_string(),
        });
    }
    Ok(())
}

/// Reports every row-level problem in a weekly file, then structural ones
/// (gaps and missing cells) if the rows themselves were clean.
pub fn check_weekly_csv<R: Read>(source: &SourceSpec, content: R) -> Vec<IngestError> {
    match collect_weekly(source, content) {
        Ok((cells, issues, identity)) if issues.is_empty() => {
            match assemble_weekly(identity, cells) {
                Ok(_) => Vec::new(),
                Err(e) => vec![e],
            }
        }
        Ok((_, issues, _)) => issues,
        Err(e) => vec![e],
    }
}

/// Parses a canonical weekly CSV into a [`DeathTable`].
pub fn parse_weekly_csv<R: Read>(
    source: &SourceSpec,
    content: R,
) -> Result<DeathTable, IngestError> {
    let (cells, mut issues, identity) = collect_weekly(source, content)?;
    if !issues.is_empty() {
        return Err(issues.swap_remove(0));
    }
    assemble_weekly(identity, cells)
}

type WeeklyCells = BTreeMap<(WeekIndex, Place), u64>;

fn collect_weekly<R: Read>(
    source: &SourceSpec,
    content: R,
) -> Result<(WeeklyCells, Vec<IngestError>, FileIdentity), IngestError> {
    if source.agency == Agency::Nisra && source.measure == Measure::TotalDeaths {
        return Err(IngestError::NisraWeeklyTotals);
    }
    let mut rdr = reader(content);
    check_header(rdr.headers()?, &WEEKLY_HEADER)?;
    let mut identity = FileIdentity::default();
    let mut cells = WeeklyCells::new();
    let mut issues = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                issues.push(e.into());
                continue;
            }
        };
        let row = row_number(&rec);
        let parsed = (|| -> Result<(WeekIndex, Place, u64), IngestError> {
            let nation: Nation = field(row, "nation", &rec[0])?;
            check_nation(row, nation)?;
            let measure: Measure = field(row, "measure", &rec[1])?;
            if measure != source.measure {
                return Err(IngestError::Field {
                    row,
                    column: "measure",
                    message: format!("expected {}, found {measure}", source.measure),
                });
            }
            identity.observe(row, nation, measure)?;
            let year: i32 = field(row, "iso_year", &rec[2])?;
            let wk: u32 = field(row, "iso_week", &rec[3])?;
            let week = WeekIndex::new(year, wk).map_err(|e| IngestError::Field {
                row,
                column: "iso_week",
                message: e.to_string(),
            })?;
            let place: Place = field(row, "place", &rec[4])?;
            let count = parse_count(row, &rec[5])?;
            Ok((week, place, count))
        })();
        match parsed {
            Ok((week, place, count)) => {
                if cells.insert((week, place), count).is_some() {
                    issues.push(IngestError::Duplicate { row, week, place });
                }
            }
            Err(e) => issues.push(e),
        }
    }
    Ok((cells, issues, identity))
}

fn assemble_weekly(identity: FileIdentity, cells: WeeklyCells) -> Result<DeathTable, IngestError> {
    let (Some(nation), Some(measure)) = (identity.nation, identity.measure) else {
        return Err(IngestError::Empty);
    };
    let weeks: BTreeSet<WeekIndex> = cells.keys().map(|(w, _)| *w).collect();
    let weeks = contiguous_weeks(&weeks)?;
    let mut columns = Vec::with_capacity(weeks.len());
    for &week in &weeks {
        let mut col = [0u64; PLACE_COUNT];
        for place in Place::ALL {
            col[place.index()] = *cells
                .get(&(week, place))
                .ok_or(IngestError::MissingCell { week, place })?;
        }
        columns.push(col);
    }
    Ok(DeathTable::new(nation, measure, weeks, columns)?)
}

/// Parses a health-board weekly CSV (`board` column, agency place labels)
/// and aggregates it to a national [`DeathTable`].
pub fn parse_board_csv<R: Read>(
    source: &SourceSpec,
    content: R,
) -> Result<DeathTable, IngestError> {
    let mut rdr = reader(content);
    check_header(rdr.headers()?, &BOARD_HEADER)?;
    let mut identity = FileIdentity::default();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = row_number(&rec);
        let nation: Nation = field(row, "nation", &rec[0])?;
        check_nation(row, nation)?;
        let measure: Measure = field(row, "measure", &rec[1])?;
        identity.observe(row, nation, measure)?;
        let year: i32 = field(row, "iso_year", &rec[2])?;
        let wk: u32 = field(row, "iso_week", &rec[3])?;
        let week = WeekIndex::new(year, wk).map_err(|e| IngestError::Field {
            row,
            column: "iso_week",
            message: e.to_string(),
        })?;
        rows.push(BoardRow {
            board: rec[4].to_string(),
            place: map_place_labels(source.agency, &rec[5])?,
            week,
            count: parse_count(row, &rec[6])?,
        });
    }
    let (Some(nation), Some(measure)) = (identity.nation, identity.measure) else {
        return Err(IngestError::Empty);
    };
    aggregate_health_boards(nation, measure, &rows)
}

/// Parses a canonical monthly CSV into a [`MonthlyTable`].
pub fn parse_monthly_csv<R: Read>(
    source: &SourceSpec,
    content: R,
) -> Result<MonthlyTable, IngestError> {
    let mut rdr = reader(content);
    check_header(rdr.headers()?, &MONTHLY_HEADER)?;
    let mut identity = FileIdentity::default();
    let mut cells: BTreeMap<(YearMonth, Place), u64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = row_number(&rec);
        let nation: Nation = field(row, "nation", &rec[0])?;
        check_nation(row, nation)?;
        let measure: Measure = field(row, "measure", &rec[1])?;
        if measure != source.measure {
            return Err(IngestError::Field {
                row,
                column: "measure",
                message: format!("expected {}, found {measure}", source.measure),
            });
        }
        identity.observe(row, nation, measure)?;
        let year: i32 = field(row, "year", &rec[2])?;
        let m: u32 = field(row, "month", &rec[3])?;
        let month = YearMonth::new(year, m).map_err(|e| IngestError::Field {
            row,
            column: "month",
            message: e.to_string(),
        })?;
        let place: Place = field(row, "place", &rec[4])?;
        let count = parse_count(row, &rec[5])?;
        if cells.insert((month, place), count).is_some() {
            return Err(IngestError::DuplicateMonth { row, month, place });
        }
    }
    let (Some(nation), Some(measure)) = (identity.nation, identity.measure) else {
        return Err(IngestError::Empty);
    };
    let months: Vec<YearMonth> = cells
        .keys()
        .map(|(m, _)| *m)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for pair in months.windows(2) {
        if pair[1] != pair[0].succ() {
            return Err(IngestError::MonthGap {
                missing: pair[0].succ(),
            });
        }
    }
    let mut columns = Vec::with_capacity(months.len());
    for &month in &months {
        let mut col = [0u64; PLACE_COUNT];
        for place in Place::ALL {
            col[place.index()] = *cells
                .get(&(month, place))
                .ok_or(IngestError::MissingMonthCell { month, place })?;
        }
        columns.push(col);
    }
    Ok(MonthlyTable::new(nation, measure, months, columns)?)
}

/// A parsed input file of either granularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadedTable {
    Weekly(DeathTable),
    Monthly(MonthlyTable),
}

impl LoadedTable {
    pub fn nation(&self) -> Nation {
        match self {
            LoadedTable::Weekly(t) => t.nation(),
            LoadedTable::Monthly(t) => t.nation(),
        }
    }

    pub fn measure(&self) -> Measure {
        match self {
            LoadedTable::Weekly(t) => t.measure(),
            LoadedTable::Monthly(t) => t.measure(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Weekly,
    Board,
    Monthly,
}

/// Reads the header and the first data row to build a [`SourceSpec`]. The
/// agency follows from the nation.
fn sniff(path: &Path, text: &str) -> Result<(SourceSpec, Layout), IngestError> {
    let mut rdr = reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let layout = if header.iter().eq(WEEKLY_HEADER.iter().copied()) {
        Layout::Weekly
    } else if header.iter().eq(BOARD_HEADER.iter().copied()) {
        Layout::Board
    } else if header.iter().eq(MONTHLY_HEADER.iter().copied()) {
        Layout::Monthly
    } else {
        return Err(IngestError::Header {
            expected: WEEKLY_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    };
    let first = rdr.records().next().ok_or(IngestError::Empty)??;
    let row = row_number(&first);
    let nation: Nation = field(row, "nation", &first[0])?;
    let measure: Measure = field(row, "measure", &first[1])?;
    let granularity = match layout {
        Layout::Monthly => Granularity::Monthly,
        _ => Granularity::Weekly,
    };
    let spec = SourceSpec::new(Agency::for_nation(nation), path, measure, granularity)?;
    Ok((spec, layout))
}

/// Parses file content of any supported layout.
pub fn load_str(path: &Path, text: &str) -> Result<(SourceSpec, LoadedTable), IngestError> {
    let (spec, layout) = sniff(path, text)?;
    let table = match layout {
        Layout::Weekly => LoadedTable::Weekly(parse_weekly_csv(&spec, text.as_bytes())?),
        Layout::Board => LoadedTable::Weekly(parse_board_csv(&spec, text.as_bytes())?),
        Layout::Monthly => LoadedTable::Monthly(parse_monthly_csv(&spec, text.as_bytes())?),
    };
    Ok((spec, table))
}

/// Collects every issue in file content of any supported layout.
pub fn check_str(path: &Path, text: &str) -> Vec<IngestError> {
    match sniff(path, text) {
        Ok((spec, Layout::Weekly)) => check_weekly_csv(&spec, text.as_bytes()),
        Ok((spec, Layout::Board)) => parse_board_csv(&spec, text.as_bytes())
            .err()
            .into_iter()
            .collect(),
        Ok((spec, Layout::Monthly)) => parse_monthly_csv(&spec, text.as_bytes())
            .err()
            .into_iter()
            .collect(),
        Err(e) => vec![e],
    }
}

/// Sums England-and-Wales, Scotland and (for COVID-19 deaths only) Northern
/// Ireland over their common weeks.
///
/// Weekly all-cause totals do not exist for Northern Ireland, so `ni` is
/// ignored when the measure is [`Measure::TotalDeaths`].
pub fn combine_uk(
    england_wales: &DeathTable,
    scotland: &DeathTable,
    ni: Option<&DeathTable>,
) -> Result<DeathTable, IngestError> {
    let measure = england_wales.measure();
    if scotland.measure() != measure {
        return Err(IngestError::MeasureMismatch(measure, scotland.measure()));
    }
    let ni = match (measure, ni) {
        (Measure::TotalDeaths, _) | (_, None) => None,
        (_, Some(t)) if t.measure() != measure => {
            return Err(IngestError::MeasureMismatch(measure, t.measure()))
        }
        (_, Some(t)) => Some(t),
    };
    let parts: Vec<&DeathTable> = [Some(england_wales), Some(scotland), ni]
        .into_iter()
        .flatten()
        .collect();
    let start = parts
        .iter()
        .map(|t| t.first_week())
        .max()
        .expect("non-empty");
    let end = parts
        .iter()
        .map(|t| t.last_week())
        .min()
        .expect("non-empty");
    if start > end {
        return Err(IngestError::EmptyIntersection);
    }
    let len = (end.ordinal - start.ordinal + 1) as usize;
    let mut out = DeathTable::zeros(Nation::Uk, measure, start, len);
    let mut columns = out.columns().to_vec();
    for t in parts {
        let s = t.slice(start, end).expect("within intersection");
        for (acc, col) in columns.iter_mut().zip(s.columns()) {
            for (a, c) in acc.iter_mut().zip(col) {
                *a += c;
            }
        }
    }
    out = DeathTable::new(Nation::Uk, measure, out.weeks().to_vec(), columns)?;
    Ok(out)
}
