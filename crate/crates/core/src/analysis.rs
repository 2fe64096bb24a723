//! Wave windows, per-wave fitting, peak extraction and β-sign tables.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, FitError};
use crate::lm::{lm_fit, FitResult, LmConfig};
use crate::models::{
    ComplementLogisticModel, Curve, CurveModel, DoubleLogisticModel, ModelKind, WeibullModel,
    WeibullParams,
};
use crate::scalar::Scalar;
use crate::transform::{PlaceSel, ProportionSeries, SeriesKind};
use crate::types::{Nation, Place};
use crate::week::WeekIndex;

/// Minimum defined in-window points for a Weibull fit.
pub const MIN_WEIBULL_POINTS: usize = 5;
/// Minimum defined in-window points for a (complement) logistic fit.
pub const MIN_LOGISTIC_POINTS: usize = 7;
/// Cells whose peak weekly COVID-19 count is below this are flagged.
pub const LOW_COUNT_THRESHOLD: u64 = 10;
/// Resolution of the fitted-curve peak search, in weeks.
pub const PEAK_GRID_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WaveLabel {
    Wave(u8),
    /// The union of all configured waves.
    Full,
}

impl fmt::Display for WaveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveLabel::Wave(k) => write!(f, "wave{k}"),
            WaveLabel::Full => f.write_str("full"),
        }
    }
}

/// Inclusive week range of one wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaveWindow {
    pub label: WaveLabel,
    pub start: WeekIndex,
    pub end: WeekIndex,
}

impl WaveWindow {
    pub fn new(label: WaveLabel, start: WeekIndex, end: WeekIndex) -> Result<Self, AnalysisError> {
        if start >= end {
            return Err(AnalysisError::InvalidWindow { start, end });
        }
        Ok(Self { label, start, end })
    }

    pub fn contains(&self, week: WeekIndex) -> bool {
        self.start <= week && week <= self.end
    }

    pub fn contains_ordinal<T: Scalar>(&self, t: T) -> bool {
        t >= T::lit(self.start.ordinal as f64) && t <= T::lit(self.end.ordinal as f64)
    }
}

impl fmt::Display for WaveWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}:{})", self.label, self.start, self.end)
    }
}

fn wk(y: i32, w: u32) -> WeekIndex {
    WeekIndex::new(y, w).expect("valid default week")
}

/// 2020w10–2020w38, 2020w38–2020w51 and 2020w51–2021w08.
pub fn default_wave_windows() -> Vec<WaveWindow> {
    vec![
        WaveWindow {
            label: WaveLabel::Wave(1),
            start: wk(2020, 10),
            end: wk(2020, 38),
        },
        WaveWindow {
            label: WaveLabel::Wave(2),
            start: wk(2020, 38),
            end: wk(2020, 51),
        },
        WaveWindow {
            label: WaveLabel::Wave(3),
            start: wk(2020, 51),
            end: wk(2021, 8),
        },
    ]
}

/// Parses `2020w10:2020w38,2020w38:2020w51,...`; windows are labelled
/// `wave1`, `wave2`, ... in the order given.
pub fn parse_wave_spec(spec: &str) -> Result<Vec<WaveWindow>, AnalysisError> {
    let bad = || AnalysisError::WaveSpec(spec.to_string());
    let mut out = Vec::new();
    for (k, part) in spec.split(',').enumerate() {
        let (a, b) = part.trim().split_once(':').ok_or_else(bad)?;
        let label = WaveLabel::Wave(u8::try_from(k + 1).map_err(|_| bad())?);
        out.push(WaveWindow::new(label, a.parse()?, b.parse()?)?);
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// One window covering every given window.
pub fn span_window(windows: &[WaveWindow]) -> Option<WaveWindow> {
    let start = windows.iter().map(|w| w.start).min()?;
    let end = windows.iter().map(|w| w.end).max()?;
    Some(WaveWindow {
        label: WaveLabel::Full,
        start,
        end,
    })
}

/// Model used for a series: Weibull for deaths due to COVID-19, the
/// complement logistic for the hospital share of COVID-19 deaths and the
/// double logistic for every other share.
pub fn model_for(kind: SeriesKind, place: PlaceSel) -> ModelKind {
    match (kind, place) {
        (SeriesKind::ProportionOfCovidDeaths, PlaceSel::Place(Place::Hospital)) => {
            ModelKind::ComplementLogistic
        }
        (SeriesKind::ProportionOfCovidDeaths, _) => ModelKind::DoubleLogistic,
        _ => ModelKind::ModifiedWeibull,
    }
}

/// Northern Ireland's Homes series has too few non-zero values to fit.
pub fn excluded_from_fitting(nation: Nation, place: PlaceSel, kind: SeriesKind) -> bool {
    nation == Nation::NorthernIreland
        && place == PlaceSel::Place(Place::Home)
        && kind == SeriesKind::DeathsDueToCovid
}

pub fn is_low_count(peak_weekly_count: u64) -> bool {
    peak_weekly_count < LOW_COUNT_THRESHOLD
}

/// β prior by wave: positive for the first wave, negative afterwards.
pub fn beta_prior<T: Scalar>(label: WaveLabel) -> T {
    match label {
        WaveLabel::Wave(k) if k > 1 => T::lit(-2.0),
        _ => T::lit(2.0),
    }
}

fn argmax<T: Scalar>(points: &[(T, T)]) -> (T, T) {
    points
        .iter()
        .copied()
        .fold(None, |best: Option<(T, T)>, p| match best {
            Some(b) if b.1 >= p.1 => Some(b),
            _ => Some(p),
        })
        .expect("non-empty points")
}

/// Data-driven Weibull start for a given β: the data maximum is placed at the
/// curve's mode with matching height.
pub fn weibull_initial_guess<T: Scalar>(points: &[(T, T)], mu: T, beta: T) -> [T; 3] {
    let (t_peak, y_peak) = argmax(points);
    let offset = (t_peak - mu).max(T::one());
    let (alpha, gamma) = match (
        WeibullParams::mode_x(beta),
        WeibullParams::peak_factor(beta),
    ) {
        (Some(x), Some(h)) => (offset / x, y_peak / h),
        _ => (offset, y_peak),
    };
    [gamma, alpha, beta]
}

/// Data-driven logistic start: amplitude at the data maximum, midpoints at the
/// first and last half-maximum crossings.
pub fn logistic_initial_guess<T: Scalar>(points: &[(T, T)], complement: bool, nu: T) -> [T; 5] {
    let hundred = T::lit(100.0);
    let z: Vec<(T, T)> = points
        .iter()
        .map(|&(t, y)| (t, if complement { hundred - y } else { y }))
        .collect();
    let (_, z_max) = argmax(&z);
    let half = z_max / T::lit(2.0);
    let above: Vec<T> = z.iter().filter(|p| p.1 >= half).map(|p| p.0).collect();
    let kappa_g = above.first().copied().unwrap_or(z[0].0);
    let mut kappa_d = above.last().copied().unwrap_or(z[z.len() - 1].0);
    if kappa_d <= kappa_g {
        kappa_d = kappa_g + T::one();
    }
    [z_max, nu, nu, kappa_g, kappa_d]
}

/// A fitted wave for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFit<T> {
    pub window: WaveWindow,
    pub kind: ModelKind,
    /// Weibull location (window start ordinal); unused by the logistic models.
    pub mu: T,
    /// Start vector that produced the returned fit.
    pub initial_guess: Vec<T>,
    pub fit: FitResult<T>,
    pub curve: Curve<T>,
    /// The `(ordinal, value)` points the model was fitted to.
    pub points: Vec<(T, T)>,
}

impl<T: Scalar> WaveFit<T> {
    pub fn beta(&self) -> Option<T> {
        match self.curve {
            Curve::Weibull(p) => Some(p.beta),
            _ => None,
        }
    }
}

fn better<T: Scalar>(a: &FitResult<T>, b: &FitResult<T>) -> bool {
    // prefer converged fits, then lower cost
    match (a.converged, b.converged) {
        (true, false) => true,
        (false, true) => false,
        _ => a.cost <= b.cost,
    }
}

fn multi_start<T: Scalar, M: CurveModel<T>>(
    model: &M,
    points: &[(T, T)],
    starts: Vec<Vec<T>>,
    config: &LmConfig<T>,
) -> Result<(Vec<T>, FitResult<T>), FitError> {
    let mut best: Option<(Vec<T>, FitResult<T>)> = None;
    let mut first_err = None;
    for start in starts {
        match lm_fit(model, points, &start, config) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|(_, b)| !better(b, &fit)) {
                    best = Some((start, fit));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one start"))
}

/// Fits `kind` to the defined points of `series` inside `window`.
///
/// The Weibull location μ is the window start. Two starts are tried for the
/// Weibull fit, one with the wave's β prior and one with the opposite sign;
/// logistic fits try three steepness values. The start with the lower
/// residual sum of squares wins.
pub fn fit_wave<T: Scalar>(
    series: &ProportionSeries<T>,
    window: &WaveWindow,
    kind: ModelKind,
    config: &LmConfig<T>,
) -> Result<WaveFit<T>, AnalysisError> {
    let points = series.points_in(window.start, window.end);
    let needed = match kind {
        ModelKind::ModifiedWeibull => MIN_WEIBULL_POINTS,
        _ => MIN_LOGISTIC_POINTS,
    };
    if points.len() < needed {
        return Err(AnalysisError::InsufficientData {
            defined: points.len(),
            needed,
        });
    }
    if points.iter().all(|p| p.1 == points[0].1) {
        return Err(FitError::ZeroVariance.into());
    }
    let mu = T::lit(window.start.ordinal as f64);
    let (initial_guess, fit) = match kind {
        ModelKind::ModifiedWeibull => {
            let prior = beta_prior::<T>(window.label);
            let starts = [prior, -prior]
                .into_iter()
                .map(|b| weibull_initial_guess(&points, mu, b).to_vec())
                .collect();
            multi_start(&WeibullModel { mu }, &points, starts, config)?
        }
        ModelKind::DoubleLogistic | ModelKind::ComplementLogistic => {
            let complement = kind == ModelKind::ComplementLogistic;
            let starts = [0.5, 0.2, 1.0]
                .into_iter()
                .map(|nu| logistic_initial_guess(&points, complement, T::lit(nu)).to_vec())
                .collect();
            if complement {
                multi_start(&ComplementLogisticModel, &points, starts, config)?
            } else {
                multi_start(&DoubleLogisticModel, &points, starts, config)?
            }
        }
    };
    let curve = Curve::from_fit(kind, &fit.theta_hat, mu);
    Ok(WaveFit {
        window: *window,
        kind,
        mu,
        initial_guess,
        fit,
        curve,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeakSource {
    FittedCurve,
    RawData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakDescriptor<T> {
    pub wave: WaveLabel,
    /// Possibly fractional week ordinal of the peak.
    pub ordinal: T,
    /// The ISO week containing the peak (ordinal rounded to nearest).
    pub week: WeekIndex,
    pub magnitude: T,
    pub source: PeakSource,
}

/// Maximum of `curve` over `window` on a 0.1-week grid; the earliest grid
/// point wins ties.
pub fn peak_of_curve<T: Scalar>(curve: &Curve<T>, window: &WaveWindow) -> PeakDescriptor<T> {
    let steps =
        ((window.end.ordinal - window.start.ordinal) as f64 / PEAK_GRID_STEP).round() as i64;
    let start = window.start.ordinal as f64;
    let mut best = (T::lit(start), curve.eval(T::lit(start)));
    for k in 1..=steps {
        let t = T::lit(start + k as f64 * PEAK_GRID_STEP);
        let v = curve.eval(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    PeakDescriptor {
        wave: window.label,
        ordinal: best.0,
        week: WeekIndex::from_ordinal(best.0.to_f64_lossy().round() as i64),
        magnitude: best.1,
        source: PeakSource::FittedCurve,
    }
}

/// Fitted-curve peak of a converged wave fit.
pub fn peak_of_fit<T: Scalar>(fit: &WaveFit<T>) -> Result<PeakDescriptor<T>, AnalysisError> {
    if !fit.fit.converged {
        return Err(AnalysisError::NotConverged);
    }
    Ok(peak_of_curve(&fit.curve, &fit.window))
}

/// Largest observed value in the fitted points.
pub fn raw_peak<T: Scalar>(fit: &WaveFit<T>) -> PeakDescriptor<T> {
    let (t, y) = argmax(&fit.points);
    PeakDescriptor {
        wave: fit.window.label,
        ordinal: t,
        week: WeekIndex::from_ordinal(t.to_f64_lossy().round() as i64),
        magnitude: y,
        source: PeakSource::RawData,
    }
}

/// `b - a` in weeks.
pub fn peak_lag<T: Scalar>(
    a: &PeakDescriptor<T>,
    b: &PeakDescriptor<T>,
) -> Result<T, AnalysisError> {
    if a.wave != b.wave {
        return Err(AnalysisError::CrossWave(
            a.wave.to_string(),
            b.wave.to_string(),
        ));
    }
    Ok(b.ordinal - a.ordinal)
}

/// Identity of one fitted cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub nation: Nation,
    pub place: PlaceSel,
    pub kind: SeriesKind,
    pub wave: WaveLabel,
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}",
            self.nation, self.place, self.kind, self.wave
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaSign {
    Positive,
    Negative,
    NotAvailable,
}

impl BetaSign {
    pub fn symbol(self) -> &'static str {
        match self {
            BetaSign::Positive => "+",
            BetaSign::Negative => "-",
            BetaSign::NotAvailable => "NA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSignEntry<T> {
    pub nation: Nation,
    pub place: PlaceSel,
    pub wave: WaveLabel,
    pub sign: BetaSign,
    pub r_squared: Option<T>,
}

/// One entry per cell; cells without a Weibull fit are `NotAvailable`.
pub fn beta_sign_table<T: Scalar>(
    cells: &[(CellId, Option<&WaveFit<T>>)],
) -> Result<Vec<BetaSignEntry<T>>, AnalysisError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(cells.len());
    for (id, fit) in cells {
        if !seen.insert(*id) {
            return Err(AnalysisError::DuplicateCell(id.to_string()));
        }
        let (sign, r_squared) = match fit.and_then(|f| f.beta().map(|b| (b, f.fit.r_squared))) {
            Some((b, r2)) if b > T::zero() => (BetaSign::Positive, Some(r2)),
            Some((_, r2)) => (BetaSign::Negative, Some(r2)),
            None => (BetaSign::NotAvailable, None),
        };
        out.push(BetaSignEntry {
            nation: id.nation,
            place: id.place,
            wave: id.wave,
            sign,
            r_squared,
        });
    }
    Ok(out)
}

fn place_heading(place: PlaceSel) -> &'static str {
    match place {
        PlaceSel::All => "",
        PlaceSel::Place(Place::Home) => "Homes",
        PlaceSel::Place(Place::CareHome) => "Care Homes",
        PlaceSel::Place(Place::Hospital) => "Hospitals",
        PlaceSel::Place(Place::Hospice) => "Hospices",
        PlaceSel::Place(Place::Oce) => "OCE",
        PlaceSel::Place(Place::Elsewhere) => "Elsewhere",
    }
}

fn nation_heading(n: Nation) -> &'static str {
    match n {
        Nation::Uk => "UK",
        Nation::England => "England",
        Nation::Scotland => "Scotland",
        Nation::Wales => "Wales",
        Nation::NorthernIreland => "Northern Ireland",
        Nation::EnglandAndWales => "England and Wales",
    }
}

const NATION_ORDER: [Nation; 6] = [
    Nation::Uk,
    Nation::England,
    Nation::Scotland,
    Nation::Wales,
    Nation::NorthernIreland,
    Nation::EnglandAndWales,
];

/// Markdown table with national rows first, then Homes, Care Homes and
/// Hospitals per nation.
pub fn beta_sign_markdown<T: Scalar>(entries: &[BetaSignEntry<T>], waves: &[WaveLabel]) -> String {
    let mut s = String::from("| Place |");
    for w in waves {
        s += &format!(" β {w} |");
    }
    s += "\n|---|";
    for _ in waves {
        s += "---|";
    }
    s.push('\n');
    let groups = [
        PlaceSel::All,
        PlaceSel::Place(Place::Home),
        PlaceSel::Place(Place::CareHome),
        PlaceSel::Place(Place::Hospital),
    ];
    for place in groups {
        for nation in NATION_ORDER {
            let row: Vec<&BetaSignEntry<T>> = entries
                .iter()
                .filter(|e| e.nation == nation && e.place == place)
                .collect();
            if row.is_empty() {
                continue;
            }
            let name = match place {
                PlaceSel::All => nation_heading(nation).to_string(),
                p => format!("{} ({})", place_heading(p), nation_heading(nation)),
            };
            s += &format!("| {name} |");
            for w in waves {
                let sign = row
                    .iter()
                    .find(|e| e.wave == *w)
                    .map_or(BetaSign::NotAvailable, |e| e.sign);
                s += &format!(" {} |", sign.symbol());
            }
            s.push('\n');
        }
    }
    s
}

/// `(ordinal, observed, fitted)` on a 0.1-week grid over the window; the
/// observed value is present only at whole weeks with data.
pub fn plot_grid<T: Scalar>(fit: &WaveFit<T>) -> Vec<(f64, Option<T>, T)> {
    let start = fit.window.start.ordinal;
    let steps = (fit.window.end.ordinal - start) * 10;
    (0..=steps)
        .map(|k| {
            let t = start as f64 + k as f64 * PEAK_GRID_STEP;
            let observed = if k % 10 == 0 {
                let ord = T::lit((start + k / 10) as f64);
                fit.points.iter().find(|p| p.0 == ord).map(|p| p.1)
            } else {
                None
            };
            (t, observed, fit.curve.eval(T::lit(t)))
        })
        .collect()
}
