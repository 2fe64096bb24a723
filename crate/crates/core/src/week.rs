//! ISO-8601 week indexing.
//!
//! Every [`WeekIndex`] carries an ordinal counted from ISO week 1 of 2020
//! (ordinal 0), so differences between ordinals are calendar week
//! differences, also across year boundaries.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::WeekError;

const EPOCH_YEAR: i32 = 2020;

fn epoch_monday() -> NaiveDate {
    NaiveDate::from_isoywd_opt(EPOCH_YEAR, 1, Weekday::Mon).expect("epoch week exists")
}

fn monday_of(iso_year: i32, iso_week: u32) -> Result<NaiveDate, WeekError> {
    NaiveDate::from_isoywd_opt(iso_year, iso_week, Weekday::Mon)
        .ok_or(WeekError::InvalidWeek { iso_year, iso_week })
}

/// Number of weeks between ISO week 1 of 2020 and `(iso_year, iso_week)`.
pub fn week_ordinal(iso_year: i32, iso_week: u32) -> Result<i64, WeekError> {
    let monday = monday_of(iso_year, iso_week)?;
    Ok((monday - epoch_monday()).num_days().div_euclid(7))
}

/// Number of ISO weeks (52 or 53) in `iso_year`.
pub fn weeks_in_iso_year(iso_year: i32) -> u32 {
    // 28 December always lies in the last ISO week of its year.
    NaiveDate::from_ymd_opt(iso_year, 12, 28)
        .map(|d| d.iso_week().week())
        .unwrap_or(52)
}

/// An ISO year-week pair together with its ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeekIndex {
    pub iso_year: i32,
    pub iso_week: u32,
    pub ordinal: i64,
}

impl WeekIndex {
    pub fn new(iso_year: i32, iso_week: u32) -> Result<Self, WeekError> {
        let ordinal = week_ordinal(iso_year, iso_week)?;
        Ok(Self {
            iso_year,
            iso_week,
            ordinal,
        })
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let monday = epoch_monday() + Duration::weeks(ordinal);
        let iw = monday.iso_week();
        Self {
            iso_year: iw.year(),
            iso_week: iw.week(),
            ordinal,
        }
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal + 1)
    }

    pub fn offset(self, weeks: i64) -> Self {
        Self::from_ordinal(self.ordinal + weeks)
    }

    /// The Thursday of this week; it decides which month the week belongs to.
    pub fn thursday(self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.iso_year, self.iso_week, Weekday::Thu)
            .expect("validated week")
    }

    pub fn month(self) -> YearMonth {
        let thu = self.thursday();
        YearMonth {
            year: thu.year(),
            month: thu.month(),
        }
    }
}

impl PartialOrd for WeekIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for WeekIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ordinal.cmp(&other.ordinal)
    }
}

impl fmt::Display for WeekIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}w{:02}", self.iso_year, self.iso_week)
    }
}

impl FromStr for WeekIndex {
    type Err = WeekError;

    /// Accepts `2020w10`, `2020W10` and `2020-W10`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WeekError::Parse(s.to_string());
        let t = s.trim();
        let pos = t.find(['w', 'W']).ok_or_else(bad)?;
        let year_part = t[..pos].trim_end_matches('-');
        let year: i32 = year_part.parse().map_err(|_| bad())?;
        let week: u32 = t[pos + 1..].parse().map_err(|_| bad())?;
        WeekIndex::new(year, week)
    }
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, WeekError> {
        if !(1..=12).contains(&month) || NaiveDate::from_ymd_opt(year, month, 1).is_none() {
            return Err(WeekError::InvalidMonth { year, month });
        }
        Ok(Self { year, month })
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.year, self.month)
    }
}

/// All ISO weeks whose Thursday falls inside the given calendar month.
pub fn weeks_in_month(year: i32, month: u32) -> Result<Vec<WeekIndex>, WeekError> {
    YearMonth::new(year, month)?;
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("validated month");
    let to_thursday =
        (Weekday::Thu.num_days_from_monday() + 7 - first.weekday().num_days_from_monday()) % 7;
    let mut day = first + Duration::days(i64::from(to_thursday));
    let mut out = Vec::with_capacity(5);
    while day.month() == month {
        let iw = day.iso_week();
        out.push(WeekIndex::new(iw.year(), iw.week())?);
        day += Duration::weeks(1);
    }
    Ok(out)
}
