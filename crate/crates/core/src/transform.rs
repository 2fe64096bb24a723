//! Dynamic normalisations of the death tables and the alignment of monthly
//! counts onto ISO weeks.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::TransformError;
use crate::scalar::Scalar;
use crate::types::{DeathTable, Measure, MonthlyTable, Nation, Place, PLACE_COUNT};
use crate::week::{weeks_in_month, WeekIndex, YearMonth};

/// A single place, or all places together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlaceSel {
    All,
    Place(Place),
}

impl PlaceSel {
    pub fn as_str(self) -> &'static str {
        match self {
            PlaceSel::All => "All",
            PlaceSel::Place(p) => p.as_str(),
        }
    }
}

impl fmt::Display for PlaceSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeriesKind {
    /// COVID-19 deaths as a percentage of all deaths.
    DeathsDueToCovid,
    /// A place's share of the week's COVID-19 deaths.
    ProportionOfCovidDeaths,
    /// Sum of the six per-place ratios; diagnostic only, can exceed 100.
    SumOfPlaceRatios,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::DeathsDueToCovid => "DeathsDueToCovid",
            SeriesKind::ProportionOfCovidDeaths => "ProportionOfCovidDeaths",
            SeriesKind::SumOfPlaceRatios => "SumOfPlaceRatios",
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Percentages over consecutive weeks; `None` marks a zero denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionSeries<T> {
    pub nation: Nation,
    pub place: PlaceSel,
    pub kind: SeriesKind,
    pub weeks: Vec<WeekIndex>,
    pub values: Vec<Option<T>>,
}

impl<T: Scalar> ProportionSeries<T> {
    /// `(ordinal, value)` for every defined week.
    pub fn defined_points(&self) -> Vec<(T, T)> {
        self.weeks
            .iter()
            .zip(&self.values)
            .filter_map(|(w, v)| v.map(|v| (T::lit(w.ordinal as f64), v)))
            .collect()
    }

    /// Defined points with `start <= week <= end`.
    pub fn points_in(&self, start: WeekIndex, end: WeekIndex) -> Vec<(T, T)> {
        self.weeks
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= start && **w <= end)
            .filter_map(|(w, v)| v.map(|v| (T::lit(w.ordinal as f64), v)))
            .collect()
    }

    /// Weeks whose value exceeds 100, which happens when registration
    /// artefacts put more COVID-19 deaths than all-cause deaths in a cell.
    pub fn over_hundred(&self) -> Vec<WeekIndex> {
        self.weeks
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| matches!(v, Some(x) if *x > T::lit(100.0)))
            .map(|(w, _)| *w)
            .collect()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|v| v.map(|x| x * factor)).collect(),
            ..self.clone()
        }
    }
}

fn percent<T: Scalar>(num: u64, den: u64) -> Option<T> {
    (den > 0).then(|| T::lit(100.0) * T::from_count(num) / T::from_count(den))
}

fn check_pair(covid: &DeathTable, total: &DeathTable) -> Result<(), TransformError> {
    if covid.measure() != Measure::CovidDeaths {
        return Err(TransformError::MeasureMismatch {
            expected: Measure::CovidDeaths,
            found: covid.measure(),
        });
    }
    if total.measure() != Measure::TotalDeaths {
        return Err(TransformError::MeasureMismatch {
            expected: Measure::TotalDeaths,
            found: total.measure(),
        });
    }
    if covid.nation() != total.nation() {
        return Err(TransformError::NationMismatch(
            covid.nation(),
            total.nation(),
        ));
    }
    if covid.weeks() != total.weeks() {
        return Err(TransformError::WeekRangeMismatch);
    }
    Ok(())
}

/// Per-place percentage of deaths that are due to COVID-19, one series per
/// place in [`Place::ALL`] order.
pub fn deaths_due_to_covid<T: Scalar>(
    covid: &DeathTable,
    total: &DeathTable,
) -> Result<Vec<ProportionSeries<T>>, TransformError> {
    check_pair(covid, total)?;
    Ok(Place::ALL
        .into_iter()
        .map(|place| ProportionSeries {
            nation: covid.nation(),
            place: PlaceSel::Place(place),
            kind: SeriesKind::DeathsDueToCovid,
            weeks: covid.weeks().to_vec(),
            values: covid
                .place_series(place)
                .zip(total.place_series(place))
                .map(|(c, t)| percent(c, t))
                .collect(),
        })
        .collect())
}

/// National percentage of deaths due to COVID-19: all-place COVID-19 deaths
/// over all-place deaths.
pub fn national_deaths_due_to_covid<T: Scalar>(
    covid: &DeathTable,
    total: &DeathTable,
) -> Result<ProportionSeries<T>, TransformError> {
    check_pair(covid, total)?;
    Ok(ProportionSeries {
        nation: covid.nation(),
        place: PlaceSel::All,
        kind: SeriesKind::DeathsDueToCovid,
        weeks: covid.weeks().to_vec(),
        values: covid
            .week_totals()
            .into_iter()
            .zip(total.week_totals())
            .map(|(c, t)| percent(c, t))
            .collect(),
    })
}

/// The literal sum of the six per-place percentages. Undefined when any
/// place has zero all-cause deaths.
pub fn sum_of_place_ratios<T: Scalar>(
    covid: &DeathTable,
    total: &DeathTable,
) -> Result<ProportionSeries<T>, TransformError> {
    check_pair(covid, total)?;
    Ok(ProportionSeries {
        nation: covid.nation(),
        place: PlaceSel::All,
        kind: SeriesKind::SumOfPlaceRatios,
        weeks: covid.weeks().to_vec(),
        values: covid
            .columns()
            .iter()
            .zip(total.columns())
            .map(|(c, t)| {
                (0..PLACE_COUNT)
                    .map(|i| percent::<T>(c[i], t[i]))
                    .sum::<Option<T>>()
            })
            .collect(),
    })
}

/// Each place's share of the week's COVID-19 deaths.
pub fn proportion_of_covid_deaths<T: Scalar>(
    covid: &DeathTable,
) -> Result<Vec<ProportionSeries<T>>, TransformError> {
    if covid.measure() != Measure::CovidDeaths {
        return Err(TransformError::MeasureMismatch {
            expected: Measure::CovidDeaths,
            found: covid.measure(),
        });
    }
    let totals = covid.week_totals();
    Ok(Place::ALL
        .into_iter()
        .map(|place| ProportionSeries {
            nation: covid.nation(),
            place: PlaceSel::Place(place),
            kind: SeriesKind::ProportionOfCovidDeaths,
            weeks: covid.weeks().to_vec(),
            values: covid
                .place_series(place)
                .zip(&totals)
                .map(|(c, &t)| percent(c, t))
                .collect(),
        })
        .collect())
}

/// One monthly value placed on a week of its own month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedPoint<T> {
    pub month: YearMonth,
    pub week: WeekIndex,
    pub monthly_value: T,
    /// `monthly_value` divided by the number of ISO weeks in the month.
    pub per_week_value: T,
}

/// Assigns each month's all-place total to the week of that month whose
/// all-place weekly count is closest to the per-week share of the monthly
/// total. Ties go to the earliest week.
pub fn align_monthly_to_weekly<T: Scalar>(
    monthly: &MonthlyTable,
    weekly: &DeathTable,
) -> Result<Vec<AlignedPoint<T>>, TransformError> {
    let weekly_totals = weekly.week_totals();
    let mut out = Vec::with_capacity(monthly.months().len());
    for (&month, monthly_total) in monthly.months().iter().zip(monthly.month_totals()) {
        let weeks = weeks_in_month(month.year, month.month).expect("validated month");
        let monthly_value = T::from_count(monthly_total);
        let per_week_value = monthly_value / T::from_count(weeks.len() as u64);
        let mut best: Option<(T, WeekIndex)> = None;
        for week in weeks {
            let Some(j) = weekly.position(week) else {
                continue;
            };
            let dist = (per_week_value - T::from_count(weekly_totals[j])).abs();
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, week));
            }
        }
        let (_, week) = best.ok_or(TransformError::NoWeeklyOverlap(month))?;
        out.push(AlignedPoint {
            month,
            week,
            monthly_value,
            per_week_value,
        });
    }
    out.sort_by_key(|p| p.week);
    Ok(out)
}

/// Months of `monthly` that share at least one week with `weekly`.
pub fn overlapping_months(monthly: &MonthlyTable, weekly: &DeathTable) -> Option<MonthlyTable> {
    let keep: Vec<usize> = monthly
        .months()
        .iter()
        .enumerate()
        .filter(|(_, m)| {
            weeks_in_month(m.year, m.month)
                .map(|ws| ws.iter().any(|w| weekly.position(*w).is_some()))
                .unwrap_or(false)
        })
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return None;
    }
    MonthlyTable::new(
        monthly.nation(),
        monthly.measure(),
        keep.iter().map(|&i| monthly.months()[i]).collect(),
        keep.iter().map(|&i| monthly.columns()[i]).collect(),
    )
    .ok()
}

/// Deaths-due-to-COVID-19 percentages computed per month and placed on the
/// weeks chosen by [`align_monthly_to_weekly`]; other weeks are undefined.
pub fn aligned_monthly_deaths_due_to_covid<T: Scalar>(
    covid: &MonthlyTable,
    total: &MonthlyTable,
    alignment: &[AlignedPoint<T>],
    place: PlaceSel,
) -> Result<ProportionSeries<T>, TransformError> {
    if covid.nation() != total.nation() {
        return Err(TransformError::NationMismatch(
            covid.nation(),
            total.nation(),
        ));
    }
    let first = alignment.first().map(|p| p.week);
    let last = alignment.last().map(|p| p.week);
    let (Some(first), Some(last)) = (first, last) else {
        return Ok(ProportionSeries {
            nation: covid.nation(),
            place,
            kind: SeriesKind::DeathsDueToCovid,
            weeks: Vec::new(),
            values: Vec::new(),
        });
    };
    let weeks: Vec<WeekIndex> = (0..=last.ordinal - first.ordinal)
        .map(|k| first.offset(k))
        .collect();
    let mut values = vec![None; weeks.len()];
    for p in alignment {
        let ci = covid.months().iter().position(|m| *m == p.month);
        let ti = total.months().iter().position(|m| *m == p.month);
        let (Some(ci), Some(ti)) = (ci, ti) else {
            continue;
        };
        let (c, t) = match place {
            PlaceSel::All => (
                covid.columns()[ci].iter().sum(),
                total.columns()[ti].iter().sum(),
            ),
            PlaceSel::Place(pl) => (
                covid.columns()[ci][pl.index()],
                total.columns()[ti][pl.index()],
            ),
        };
        values[(p.week.ordinal - first.ordinal) as usize] = percent(c, t);
    }
    Ok(ProportionSeries {
        nation: covid.nation(),
        place,
        kind: SeriesKind::DeathsDueToCovid,
        weeks,
        values,
    })
}

pub const SERIES_HEADER: &str = "nation,place,kind,iso_year,iso_week,value";

/// Writes series as `nation,place,kind,iso_year,iso_week,value`, leaving the
/// value empty where it is undefined.
pub fn write_series_csv<T: Scalar, W: Write>(
    series: &[ProportionSeries<T>],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{SERIES_HEADER}")?;
    for s in series {
        for (w, v) in s.weeks.iter().zip(&s.values) {
            write!(
                out,
                "{},{},{},{},{},",
                s.nation, s.place, s.kind, w.iso_year, w.iso_week
            )?;
            if let Some(v) = v {
                write!(out, "{v}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
