//! Synthetic end-to-end fixture built from known curves.
//!
//! Every place in a nation shares one modified-Weibull curve per wave as its
//! deaths-due-to-COVID-19 percentage. All-cause deaths follow fixed place
//! shares: hospitals take `100 - s(t)` percent and the other places split
//! `s(t)`, a double logistic, in fixed proportions. COVID-19 deaths are
//! `round(total × W(t) / 100)`. Counts are large enough that rounding is
//! invisible at the recovery tolerance, so per-place shares of COVID-19 deaths
//! are exact double logistics (complement for hospitals).
//!
//! The committed files under `fixtures/synthetic/` are the output of
//! [`generate`]; `manifest.json` holds the generator parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavefit::ingest::WEEKLY_HEADER;
use wavefit::{DoubleLogisticParams, Measure, Nation, Place, WeekIndex, WeibullParams};

/// Weekly all-cause deaths per nation before the place split.
pub const WEEKLY_SCALE: f64 = 1e11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveCurve {
    pub wave: String,
    pub start: String,
    pub end: String,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NationFixture {
    pub nation: Nation,
    pub covid_file: String,
    pub total_file: String,
    pub waves: Vec<WaveCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareCurve {
    pub place: Place,
    pub model: String,
    pub lambda: f64,
    pub nu_g: f64,
    pub nu_d: f64,
    pub kappa_g: f64,
    pub kappa_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// The `--waves` argument the fixture is built for.
    pub waves: String,
    pub first_week: String,
    pub last_week: String,
    pub weekly_scale: f64,
    pub nations: Vec<NationFixture>,
    /// Generator curves of each place's share of COVID-19 deaths; identical
    /// for every nation.
    pub shares: Vec<ShareCurve>,
}

pub const WAVES: &str = "2020w10:2020w30,2020w31:2020w50,2020w51:2021w08";

/// Proportions of the non-hospital share.
const SPLIT: [(Place, f64); 5] = [
    (Place::Home, 0.35),
    (Place::CareHome, 0.45),
    (Place::Hospice, 0.08),
    (Place::Oce, 0.04),
    (Place::Elsewhere, 0.08),
];

fn week(s: &str) -> WeekIndex {
    s.parse().expect("fixture week")
}

fn non_hospital_share() -> DoubleLogisticParams<f64> {
    DoubleLogisticParams::new(
        60.0,
        0.4,
        0.3,
        week("2020w16").ordinal as f64,
        week("2020w44").ordinal as f64,
    )
    .expect("valid share curve")
}

fn waves_for(alpha_scale: f64) -> Vec<WaveCurve> {
    let spec: [(&str, &str, f64, f64, f64); 3] = [
        ("2020w10", "2020w30", 100.0, 7.0, 2.0),
        ("2020w31", "2020w50", 60.0, 14.0, -2.0),
        ("2020w51", "2021w08", 70.0, 12.0, -1.5),
    ];
    spec.iter()
        .enumerate()
        .map(|(k, &(start, end, gamma, alpha, beta))| WaveCurve {
            wave: format!("wave{}", k + 1),
            start: start.into(),
            end: end.into(),
            gamma,
            alpha: alpha * alpha_scale,
            beta,
            mu: week(start).ordinal as f64,
        })
        .collect()
}

pub fn manifest() -> Manifest {
    let s = non_hospital_share();
    let mut shares = vec![ShareCurve {
        place: Place::Hospital,
        model: "complement".into(),
        lambda: s.lambda,
        nu_g: s.nu_g,
        nu_d: s.nu_d,
        kappa_g: s.kappa_g,
        kappa_d: s.kappa_d,
    }];
    for (place, fraction) in SPLIT {
        shares.push(ShareCurve {
            place,
            model: "logistic".into(),
            lambda: s.lambda * fraction,
            ..shares[0].clone()
        });
    }
    Manifest {
        waves: WAVES.into(),
        first_week: "2020w10".into(),
        last_week: "2021w08".into(),
        weekly_scale: WEEKLY_SCALE,
        nations: vec![
            NationFixture {
                nation: Nation::EnglandAndWales,
                covid_file: "england_wales_covid.csv".into(),
                total_file: "england_wales_total.csv".into(),
                waves: waves_for(1.0),
            },
            NationFixture {
                nation: Nation::Scotland,
                covid_file: "scotland_covid.csv".into(),
                total_file: "scotland_total.csv".into(),
                waves: waves_for(0.85),
            },
        ],
        shares,
    }
}

/// Percentage of all-cause deaths in `place` at ordinal `t`.
fn place_share(place: Place, t: f64) -> f64 {
    let s = non_hospital_share().eval(t);
    match SPLIT.iter().find(|(p, _)| *p == place) {
        Some((_, fraction)) => s * fraction,
        None => 100.0 - s,
    }
}

fn wave_value(waves: &[WaveCurve], w: WeekIndex) -> f64 {
    waves
        .iter()
        .find(|c| week(&c.start) <= w && w <= week(&c.end))
        .map_or(0.0, |c| {
            WeibullParams::new(c.gamma, c.alpha, c.beta, c.mu)
                .expect("valid wave")
                .eval(w.ordinal as f64)
        })
}

/// `(file name, content)` for every fixture file, `manifest.json` last.
pub fn generate() -> Vec<(String, String)> {
    let m = manifest();
    let (first, last) = (week(&m.first_week), week(&m.last_week));
    let mut files = Vec::new();
    for n in &m.nations {
        let mut covid = WEEKLY_HEADER.join(",") + "\n";
        let mut total = covid.clone();
        for k in 0..=(last.ordinal - first.ordinal) {
            let w = first.offset(k);
            let pct = wave_value(&n.waves, w);
            for place in Place::ALL {
                let t = (m.weekly_scale * place_share(place, w.ordinal as f64) / 100.0).round();
                let c = (t * pct / 100.0).round();
                let row = |measure: Measure, v: f64| {
                    format!(
                        "{},{measure},{},{},{place},{}\n",
                        n.nation, w.iso_year, w.iso_week, v as u64
                    )
                };
                total += &row(Measure::TotalDeaths, t);
                covid += &row(Measure::CovidDeaths, c);
            }
        }
        files.push((n.covid_file.clone(), covid));
        files.push((n.total_file.clone(), total));
    }
    files.push((
        "manifest.json".into(),
        serde_json::to_string_pretty(&m).expect("serialisable") + "\n",
    ));
    files
}

/// Directory of the committed fixture.
pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("synthetic")
}

/// Paths of the fixture's CSV inputs.
pub fn input_paths() -> Vec<PathBuf> {
    let m = manifest();
    m.nations
        .iter()
        .flat_map(|n| {
            [
                fixture_dir().join(&n.covid_file),
                fixture_dir().join(&n.total_file),
            ]
        })
        .collect()
}
