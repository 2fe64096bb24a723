//! Place-of-occurrence mortality analysis.
//!
//! Weekly and monthly death counts per place of occurrence are normalised
//! into percentage series, split into pandemic waves and fitted with a
//! modified Weibull curve or a double logistic curve using a
//! Levenberg–Marquardt solver. The numerical code is generic over the float
//! type through [`Scalar`]; the aliases below fix it to `f64` or `f32`.

// Validation compares with `!(a > b)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod ingest;
pub mod lm;
pub mod models;
pub mod scalar;
pub mod transform;
pub mod types;
pub mod week;

pub use analysis::{
    beta_sign_markdown, beta_sign_table, default_wave_windows, fit_wave, parse_wave_spec, peak_lag,
    peak_of_curve, peak_of_fit, raw_peak, BetaSign, BetaSignEntry, CellId, PeakDescriptor,
    PeakSource, WaveFit, WaveLabel, WaveWindow,
};
pub use error::{
    AnalysisError, Error, FitError, IngestError, ModelError, TableError, TransformError, WeekError,
};
pub use lm::{lm_fit, lm_step, r_squared, FitResult, LmConfig, Termination};
pub use models::{Curve, CurveModel, DoubleLogisticParams, ModelKind, WeibullParams};
pub use scalar::Scalar;
pub use transform::{PlaceSel, ProportionSeries, SeriesKind};
pub use types::{DeathTable, Measure, MonthlyTable, Nation, Place, PLACE_COUNT};
pub use week::{week_ordinal, weeks_in_month, WeekIndex, YearMonth};

pub type WeibullParamsF64 = WeibullParams<f64>;
pub type WeibullParamsF32 = WeibullParams<f32>;
pub type DoubleLogisticParamsF64 = DoubleLogisticParams<f64>;
pub type DoubleLogisticParamsF32 = DoubleLogisticParams<f32>;
pub type FitResultF64 = FitResult<f64>;
pub type FitResultF32 = FitResult<f32>;
pub type LmConfigF64 = LmConfig<f64>;
pub type LmConfigF32 = LmConfig<f32>;
pub type ProportionSeriesF64 = ProportionSeries<f64>;
pub type ProportionSeriesF32 = ProportionSeries<f32>;
pub type CurveF64 = Curve<f64>;
pub type WaveFitF64 = WaveFit<f64>;
pub type PeakDescriptorF64 = PeakDescriptor<f64>;
