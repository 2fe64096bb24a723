//! Serialisable report rows and the single-writer output tree.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use wavefit::analysis::{beta_sign_markdown, beta_sign_table, plot_grid};
use wavefit::transform::write_series_csv;
use wavefit::{BetaSignEntry, CellId, WaveFit, WaveLabel, WeekIndex};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::pipeline::{is_weibull_cell, CellOutcome, SeriesSet};

/// One row of `fits.*`.
#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub nation: String,
    pub place: String,
    pub kind: String,
    pub wave: String,
    pub model: String,
    pub status: String,
    pub window_start: String,
    pub window_end: String,
    pub n_points: usize,
    /// Weibull location, the window start ordinal.
    pub mu: Option<f64>,
    pub params: BTreeMap<String, f64>,
    pub initial_guess: BTreeMap<String, f64>,
    pub r_squared: Option<f64>,
    pub iterations: Option<usize>,
    pub termination: Option<String>,
    pub final_damping: Option<f64>,
    pub cost: Option<f64>,
    pub flags: Vec<String>,
    pub message: Option<String>,
}

fn named(fit: &WaveFit<f64>, values: &[f64]) -> BTreeMap<String, f64> {
    fit.kind
        .param_names()
        .iter()
        .zip(values)
        .map(|(n, v)| (n.to_string(), *v))
        .collect()
}

impl FitRecord {
    pub fn from_outcome(o: &CellOutcome) -> Self {
        let fit = o.fit.as_ref();
        Self {
            nation: o.id.nation.to_string(),
            place: o.id.place.to_string(),
            kind: o.id.kind.to_string(),
            wave: o.id.wave.to_string(),
            model: o.model.to_string(),
            status: o.status.as_str().to_string(),
            window_start: o.window.start.to_string(),
            window_end: o.window.end.to_string(),
            n_points: fit.map_or(0, |f| f.points.len()),
            mu: fit.filter(|f| f.beta().is_some()).map(|f| f.mu),
            params: fit.map(|f| named(f, &f.fit.theta_hat)).unwrap_or_default(),
            initial_guess: fit.map(|f| named(f, &f.initial_guess)).unwrap_or_default(),
            r_squared: fit.map(|f| f.fit.r_squared),
            iterations: fit.map(|f| f.fit.iterations),
            termination: fit.map(|f| format!("{:?}", f.fit.termination)),
            final_damping: fit.map(|f| f.fit.final_damping),
            cost: fit.map(|f| f.fit.cost),
            flags: o.flags.iter().map(|f| f.as_str().to_string()).collect(),
            message: o.message.clone(),
        }
    }
}

/// One row of `peaks.*`.
#[derive(Debug, Clone, Serialize)]
pub struct PeakRecord {
    pub nation: String,
    pub place: String,
    pub kind: String,
    pub wave: String,
    pub model: String,
    /// Fractional week ordinal of the fitted-curve maximum (0 = 2020w01).
    pub peak_t: f64,
    pub peak_week: String,
    pub peak_value: f64,
    pub raw_peak_week: String,
    pub raw_peak_value: f64,
}

impl PeakRecord {
    pub fn from_outcome(o: &CellOutcome) -> Option<Self> {
        let (p, r) = (o.peak?, o.raw_peak?);
        Some(Self {
            nation: o.id.nation.to_string(),
            place: o.id.place.to_string(),
            kind: o.id.kind.to_string(),
            wave: o.id.wave.to_string(),
            model: o.model.to_string(),
            peak_t: p.ordinal,
            peak_week: p.week.to_string(),
            peak_value: p.magnitude,
            raw_peak_week: r.week.to_string(),
            raw_peak_value: r.magnitude,
        })
    }
}

/// One row of `beta_signs.*`.
#[derive(Debug, Clone, Serialize)]
pub struct BetaSignRecord {
    pub nation: String,
    pub place: String,
    pub wave: String,
    pub sign: String,
    pub r_squared: Option<f64>,
}

impl From<&BetaSignEntry<f64>> for BetaSignRecord {
    fn from(e: &BetaSignEntry<f64>) -> Self {
        Self {
            nation: e.nation.to_string(),
            place: e.place.to_string(),
            wave: e.wave.to_string(),
            sign: e.sign.symbol().to_string(),
            r_squared: e.r_squared,
        }
    }
}

/// A row type that can be written as CSV and Markdown.
pub trait TableRow: Serialize {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn joined(m: &BTreeMap<String, f64>) -> String {
    m.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

impl TableRow for FitRecord {
    const HEADER: &'static [&'static str] = &[
        "nation",
        "place",
        "kind",
        "wave",
        "model",
        "status",
        "window_start",
        "window_end",
        "n_points",
        "mu",
        "params",
        "initial_guess",
        "r_squared",
        "iterations",
        "termination",
        "final_damping",
        "cost",
        "flags",
        "message",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.nation.clone(),
            self.place.clone(),
            self.kind.clone(),
            self.wave.clone(),
            self.model.clone(),
            self.status.clone(),
            self.window_start.clone(),
            self.window_end.clone(),
            self.n_points.to_string(),
            opt(&self.mu),
            joined(&self.params),
            joined(&self.initial_guess),
            opt(&self.r_squared),
            opt(&self.iterations),
            opt(&self.termination),
            opt(&self.final_damping),
            opt(&self.cost),
            self.flags.join(";"),
            opt(&self.message),
        ]
    }
}

impl TableRow for PeakRecord {
    const HEADER: &'static [&'static str] = &[
        "nation",
        "place",
        "kind",
        "wave",
        "model",
        "peak_t",
        "peak_week",
        "peak_value",
        "raw_peak_week",
        "raw_peak_value",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.nation.clone(),
            self.place.clone(),
            self.kind.clone(),
            self.wave.clone(),
            self.model.clone(),
            self.peak_t.to_string(),
            self.peak_week.clone(),
            self.peak_value.to_string(),
            self.raw_peak_week.clone(),
            self.raw_peak_value.to_string(),
        ]
    }
}

impl TableRow for BetaSignRecord {
    const HEADER: &'static [&'static str] = &["nation", "place", "wave", "sign", "r_squared"];

    fn cells(&self) -> Vec<String> {
        vec![
            self.nation.clone(),
            self.place.clone(),
            self.wave.clone(),
            self.sign.clone(),
            opt(&self.r_squared),
        ]
    }
}

pub fn to_csv<R: TableRow>(rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(R::HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.cells()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn to_json<R: Serialize>(rows: &[R]) -> String {
    serde_json::to_string_pretty(rows).expect("plain records serialise") + "\n"
}

pub fn to_markdown<R: TableRow>(rows: &[R]) -> String {
    let mut s = format!("| {} |\n|", R::HEADER.join(" | "));
    s += &"---|".repeat(R::HEADER.len());
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r
            .cells()
            .into_iter()
            .map(|c| c.replace('|', "\\|"))
            .collect();
        s += &format!("| {} |\n", cells.join(" | "));
    }
    s
}

pub fn render<R: TableRow>(rows: &[R], format: Format) -> String {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
        Format::Md => to_markdown(rows),
    }
}

fn write(path: &Path, content: &[u8]) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::io(path, e))
}

fn plot_csv(fit: &WaveFit<f64>) -> String {
    let mut s = String::from("t,iso_week,observed,fitted\n");
    for (k, (t, observed, fitted)) in plot_grid(fit).into_iter().enumerate() {
        let week = if k % 10 == 0 {
            WeekIndex::from_ordinal(t.round() as i64).to_string()
        } else {
            String::new()
        };
        s += &format!("{t:.1},{week},{},{fitted}\n", opt(&observed));
    }
    s
}

#[derive(Serialize)]
struct QuarantineRecord<'a> {
    cell: FitRecord,
    points: Option<&'a [(f64, f64)]>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    inputs: Vec<String>,
    waves: Vec<String>,
    lm: &'a wavefit::LmConfig<f64>,
    formats: &'a [Format],
}

pub fn beta_entries(outcomes: &[CellOutcome]) -> Result<Vec<BetaSignEntry<f64>>, CliError> {
    let cells: Vec<(CellId, Option<&WaveFit<f64>>)> = outcomes
        .iter()
        .filter(|o| is_weibull_cell(&o.id))
        .map(|o| (o.id, o.fit.as_ref().filter(|f| f.fit.converged)))
        .collect();
    beta_sign_table(&cells).map_err(|e| CliError::Fit(e.to_string()))
}

/// Writes the whole output tree. `plots/` and `quarantine/` are recreated so
/// that a rerun leaves no stale files behind.
pub fn write_outputs(
    config: &RunConfig,
    set: &SeriesSet,
    outcomes: &[CellOutcome],
) -> Result<(), CliError> {
    let out = &config.out;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for sub in ["plots", "quarantine"] {
        let dir = out.join(sub);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    }

    let run = RunRecord {
        inputs: config
            .inputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        waves: config
            .waves
            .iter()
            .map(|w| format!("{}:{}", w.start, w.end))
            .collect(),
        lm: &config.lm,
        formats: &config.formats,
    };
    write(
        &out.join("run.json"),
        (serde_json::to_string_pretty(&run).expect("serialisable") + "\n").as_bytes(),
    )?;

    let mut buf = Vec::new();
    write_series_csv(&set.all_series(), &mut buf).expect("in-memory write");
    write(&out.join("series.csv"), &buf)?;
    buf.clear();
    write_series_csv(&set.diagnostics, &mut buf).expect("in-memory write");
    write(&out.join("diagnostics.csv"), &buf)?;

    let fits: Vec<FitRecord> = outcomes.iter().map(FitRecord::from_outcome).collect();
    let peaks: Vec<PeakRecord> = outcomes
        .iter()
        .filter_map(PeakRecord::from_outcome)
        .collect();
    let entries = beta_entries(outcomes)?;
    let signs: Vec<BetaSignRecord> = entries.iter().map(BetaSignRecord::from).collect();
    let waves: Vec<WaveLabel> = config.waves.iter().map(|w| w.label).collect();
    for &format in &config.formats {
        let ext = format.extension();
        write(
            &out.join(format!("fits.{ext}")),
            render(&fits, format).as_bytes(),
        )?;
        write(
            &out.join(format!("peaks.{ext}")),
            render(&peaks, format).as_bytes(),
        )?;
        let signs_text = match format {
            Format::Md => beta_sign_markdown(&entries, &waves),
            _ => render(&signs, format),
        };
        write(
            &out.join(format!("beta_signs.{ext}")),
            signs_text.as_bytes(),
        )?;
    }

    for (o, record) in outcomes.iter().zip(fits) {
        if o.status.is_failure() {
            let q = QuarantineRecord {
                cell: record,
                points: o.fit.as_ref().map(|f| f.points.as_slice()),
            };
            let text = serde_json::to_string_pretty(&q).expect("serialisable") + "\n";
            write(
                &out.join("quarantine")
                    .join(format!("{}.json", o.file_stem())),
                text.as_bytes(),
            )?;
        }
        if let (Some(fit), false) = (&o.fit, o.status.is_failure()) {
            write(
                &out.join("plots").join(format!("{}.csv", o.file_stem())),
                plot_csv(fit).as_bytes(),
            )?;
        }
    }
    Ok(())
}

/// Writes `text` to stdout.
pub fn print(text: &str) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::io("<stdout>", e))
}
