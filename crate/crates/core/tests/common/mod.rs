#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavefit::{
    DoubleLogisticParams, Nation, PlaceSel, ProportionSeries, SeriesKind, WaveLabel, WaveWindow,
    WeekIndex, WeibullParams,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Window of `len` weeks starting at 2020w10.
pub fn window(label: WaveLabel, len: i64) -> WaveWindow {
    let start = WeekIndex::new(2020, 10).unwrap();
    WaveWindow::new(label, start, start.offset(len - 1)).unwrap()
}

/// Weibull wave whose mode sits between 30% and 60% of the window.
pub fn random_weibull(r: &mut ChaCha8Rng, w: &WaveWindow, beta_sign: f64) -> WeibullParams<f64> {
    let len = (w.end.ordinal - w.start.ordinal) as f64;
    let beta = beta_sign * r.gen_range(1.5..3.0);
    let mode = r.gen_range(0.3..0.6) * len;
    let x = WeibullParams::mode_x(beta).unwrap();
    let height = r.gen_range(10.0..50.0);
    let gamma = height / WeibullParams::peak_factor(beta).unwrap();
    WeibullParams::new(gamma, mode / x, beta, w.start.ordinal as f64).unwrap()
}

/// Double logistic with both midpoints well inside the window.
pub fn random_logistic(r: &mut ChaCha8Rng, w: &WaveWindow) -> DoubleLogisticParams<f64> {
    let len = (w.end.ordinal - w.start.ordinal) as f64;
    let s = w.start.ordinal as f64;
    DoubleLogisticParams::new(
        r.gen_range(20.0..80.0),
        r.gen_range(0.3..1.2),
        r.gen_range(0.3..1.2),
        s + r.gen_range(0.2..0.35) * len,
        s + r.gen_range(0.6..0.8) * len,
    )
    .unwrap()
}

pub fn series(w: &WaveWindow, f: impl Fn(f64) -> f64) -> ProportionSeries<f64> {
    let n = w.end.ordinal - w.start.ordinal + 1;
    let weeks: Vec<WeekIndex> = (0..n).map(|k| w.start.offset(k)).collect();
    let values = weeks.iter().map(|wk| Some(f(wk.ordinal as f64))).collect();
    ProportionSeries {
        nation: Nation::England,
        place: PlaceSel::All,
        kind: SeriesKind::DeathsDueToCovid,
        weeks,
        values,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
