//! Domain vocabulary: nations, places of occurrence and count matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::TableError;
use crate::week::{WeekIndex, YearMonth};

/// Number of places of occurrence.
pub const PLACE_COUNT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Nation {
    England,
    Wales,
    Scotland,
    NorthernIreland,
    EnglandAndWales,
    #[serde(rename = "UK")]
    Uk,
}

impl Nation {
    pub const ALL: [Nation; 6] = [
        Nation::England,
        Nation::Wales,
        Nation::Scotland,
        Nation::NorthernIreland,
        Nation::EnglandAndWales,
        Nation::Uk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Nation::England => "England",
            Nation::Wales => "Wales",
            Nation::Scotland => "Scotland",
            Nation::NorthernIreland => "NorthernIreland",
            Nation::EnglandAndWales => "EnglandAndWales",
            Nation::Uk => "UK",
        }
    }

    /// UK is only ever built by summing the constituent tables.
    pub fn is_derived(self) -> bool {
        matches!(self, Nation::Uk)
    }
}

impl fmt::Display for Nation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Nation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Nation::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown nation `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Place {
    Home,
    Hospital,
    Hospice,
    CareHome,
    #[serde(rename = "OCE")]
    Oce,
    Elsewhere,
}

impl Place {
    pub const ALL: [Place; PLACE_COUNT] = [
        Place::Home,
        Place::Hospital,
        Place::Hospice,
        Place::CareHome,
        Place::Oce,
        Place::Elsewhere,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Place::Home => "Home",
            Place::Hospital => "Hospital",
            Place::Hospice => "Hospice",
            Place::CareHome => "CareHome",
            Place::Oce => "OCE",
            Place::Elsewhere => "Elsewhere",
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Place {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Place::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown place `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    CovidDeaths,
    TotalDeaths,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::CovidDeaths => "CovidDeaths",
            Measure::TotalDeaths => "TotalDeaths",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CovidDeaths" => Ok(Measure::CovidDeaths),
            "TotalDeaths" => Ok(Measure::TotalDeaths),
            _ => Err(format!("unknown measure `{s}`")),
        }
    }
}

/// Deaths per place per week for one nation and one measure.
///
/// Stored column-major: `columns[j][i]` is the count for place `i` in week
/// `weeks[j]`. Weeks are contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeathTable {
    nation: Nation,
    measure: Measure,
    weeks: Vec<WeekIndex>,
    columns: Vec<[u64; PLACE_COUNT]>,
}

impl DeathTable {
    pub fn new(
        nation: Nation,
        measure: Measure,
        weeks: Vec<WeekIndex>,
        columns: Vec<[u64; PLACE_COUNT]>,
    ) -> Result<Self, TableError> {
        if weeks.is_empty() {
            return Err(TableError::Empty);
        }
        if weeks.len() != columns.len() {
            return Err(TableError::DimensionMismatch {
                weeks: weeks.len(),
                columns: columns.len(),
            });
        }
        for pair in weeks.windows(2) {
            let expected = pair[0].succ();
            if pair[1] != expected {
                return Err(TableError::WeekGap {
                    expected,
                    found: pair[1],
                });
            }
        }
        Ok(Self {
            nation,
            measure,
            weeks,
            columns,
        })
    }

    /// A table of zeros covering `len` weeks from `start`.
    pub fn zeros(nation: Nation, measure: Measure, start: WeekIndex, len: usize) -> Self {
        let weeks = (0..len as i64).map(|k| start.offset(k)).collect();
        Self {
            nation,
            measure,
            weeks,
            columns: vec![[0; PLACE_COUNT]; len],
        }
    }

    pub fn nation(&self) -> Nation {
        self.nation
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn weeks(&self) -> &[WeekIndex] {
        &self.weeks
    }

    pub fn columns(&self) -> &[[u64; PLACE_COUNT]] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }

    pub fn first_week(&self) -> WeekIndex {
        self.weeks[0]
    }

    pub fn last_week(&self) -> WeekIndex {
        self.weeks[self.weeks.len() - 1]
    }

    pub fn get(&self, place: Place, week: WeekIndex) -> Option<u64> {
        self.position(week).map(|j| self.columns[j][place.index()])
    }

    pub fn position(&self, week: WeekIndex) -> Option<usize> {
        let j = week.ordinal - self.first_week().ordinal;
        (0..self.len() as i64).contains(&j).then_some(j as usize)
    }

    pub fn place_series(&self, place: Place) -> impl Iterator<Item = u64> + '_ {
        self.columns.iter().map(move |c| c[place.index()])
    }

    /// All-place sum per week.
    pub fn week_totals(&self) -> Vec<u64> {
        self.columns.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.columns.iter().flatten().sum()
    }

    /// Restricts the table to `[start, end]` (inclusive). Returns `None` when
    /// the ranges do not overlap.
    pub fn slice(&self, start: WeekIndex, end: WeekIndex) -> Option<Self> {
        let lo = start.max(self.first_week());
        let hi = end.min(self.last_week());
        if lo > hi {
            return None;
        }
        let a = self.position(lo)?;
        let b = self.position(hi)?;
        Some(Self {
            nation: self.nation,
            measure: self.measure,
            weeks: self.weeks[a..=b].to_vec(),
            columns: self.columns[a..=b].to_vec(),
        })
    }

    pub fn with_nation(mut self, nation: Nation) -> Self {
        self.nation = nation;
        self
    }
}

/// Deaths per place per calendar month.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlyTable {
    nation: Nation,
    measure: Measure,
    months: Vec<YearMonth>,
    columns: Vec<[u64; PLACE_COUNT]>,
}

impl MonthlyTable {
    pub fn new(
        nation: Nation,
        measure: Measure,
        months: Vec<YearMonth>,
        columns: Vec<[u64; PLACE_COUNT]>,
    ) -> Result<Self, TableError> {
        if months.is_empty() {
            return Err(TableError::Empty);
        }
        if months.len() != columns.len() {
            return Err(TableError::DimensionMismatch {
                weeks: months.len(),
                columns: columns.len(),
            });
        }
        for pair in months.windows(2) {
            let expected = pair[0].succ();
            if pair[1] != expected {
                return Err(TableError::MonthGap {
                    expected,
                    found: pair[1],
                });
            }
        }
        Ok(Self {
            nation,
            measure,
            months,
            columns,
        })
    }

    pub fn nation(&self) -> Nation {
        self.nation
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn months(&self) -> &[YearMonth] {
        &self.months
    }

    pub fn columns(&self) -> &[[u64; PLACE_COUNT]] {
        &self.columns
    }

    pub fn month_totals(&self) -> Vec<u64> {
        self.columns.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.columns.iter().flatten().sum()
    }
}
