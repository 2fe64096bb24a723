use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use wavefit::ingest::WEEKLY_HEADER;
use wavefit::{Place, WeekIndex, WeibullParams};
use wavefit_cli::fixture::{input_paths, manifest, WAVES};

fn wavefit(args: &[&str], inputs: &[PathBuf]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wavefit"));
    cmd.args(args);
    for p in inputs {
        cmd.arg("--input").arg(p);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// A weekly file for one nation; `count` gets the week and place.
fn weekly_file(
    dir: &Path,
    name: &str,
    nation: &str,
    measure: &str,
    weeks: &[WeekIndex],
    count: impl Fn(WeekIndex, Place) -> String,
) -> PathBuf {
    let mut s = WEEKLY_HEADER.join(",") + "\n";
    for &w in weeks {
        for p in Place::ALL {
            s += &format!(
                "{nation},{measure},{},{},{p},{}\n",
                w.iso_year,
                w.iso_week,
                count(w, p)
            );
        }
    }
    let path = dir.join(name);
    fs::write(&path, s).unwrap();
    path
}

#[test]
fn validate_clean_fixture() {
    let o = wavefit(&["validate"], &input_paths());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().all(|l| l.ends_with(": ok")));
}

#[test]
fn validate_reports_negative_count_and_duplicate() {
    let dir = tempfile::tempdir().unwrap();
    let weeks = [
        WeekIndex::new(2020, 12).unwrap(),
        WeekIndex::new(2020, 13).unwrap(),
    ];
    let neg = weekly_file(
        dir.path(),
        "neg.csv",
        "Wales",
        "CovidDeaths",
        &weeks,
        |w, p| {
            if w.iso_week == 13 && p == Place::Hospice {
                "-2".into()
            } else {
                "4".into()
            }
        },
    );
    let o = wavefit(&["validate"], &[neg]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1, "{out}");
    assert!(
        out.contains("row 10") && out.contains("column `count`"),
        "{out}"
    );

    let dup = dir.path().join("dup.csv");
    let text = fs::read_to_string(dir.path().join("neg.csv"))
        .unwrap()
        .replace("-2", "1")
        + "Wales,CovidDeaths,2020,12,Home,9\n";
    fs::write(&dup, text).unwrap();
    let o = wavefit(&["validate"], &[dup]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stdout(&o).to_lowercase().contains("duplicate"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn missing_file_is_io_error() {
    let o = wavefit(&["validate"], &[PathBuf::from("/nonexistent/wavefit.csv")]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn fixture_parameters_recovered() {
    let out = tempfile::tempdir().unwrap();
    let o = wavefit(
        &[
            "fit",
            "--waves",
            WAVES,
            "--format",
            "json",
            "--out",
            out.path().to_str().unwrap(),
        ],
        &input_paths(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let fits: Vec<Value> =
        serde_json::from_str(&fs::read_to_string(out.path().join("fits.json")).unwrap()).unwrap();
    let m = manifest();
    let mut checked = 0;
    for n in &m.nations {
        for f in fits.iter().filter(|f| f["nation"] == n.nation.to_string()) {
            if f["kind"] == "DeathsDueToCovid" {
                let truth = n
                    .waves
                    .iter()
                    .find(|w| f["wave"] == w.wave.as_str())
                    .unwrap();
                for (name, want) in [
                    ("gamma", truth.gamma),
                    ("alpha", truth.alpha),
                    ("beta", truth.beta),
                ] {
                    let got = f["params"][name].as_f64().unwrap();
                    assert!(
                        rel(got, want) < 1e-3,
                        "{} {} {name}: {got} vs {want}",
                        f["place"],
                        f["wave"]
                    );
                }
                checked += 1;
            } else {
                let truth = m
                    .shares
                    .iter()
                    .find(|s| f["place"] == s.place.to_string())
                    .unwrap();
                assert_eq!(f["model"], truth.model.as_str());
                let want = [
                    truth.lambda,
                    truth.nu_g,
                    truth.nu_d,
                    truth.kappa_g,
                    truth.kappa_d,
                ];
                for (name, want) in ["lambda", "nu_g", "nu_d", "kappa_g", "kappa_d"]
                    .iter()
                    .zip(want)
                {
                    let got = f["params"][*name].as_f64().unwrap();
                    assert!(
                        rel(got, want) < 1e-3,
                        "{} {name}: {got} vs {want}",
                        f["place"]
                    );
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 2 * (7 * 3 + 6));
    assert!(out
        .path()
        .join("plots/Scotland_CareHome_wave2_weibull.csv")
        .exists());
    assert!(fs::read_dir(out.path().join("quarantine"))
        .unwrap()
        .next()
        .is_none());
}

#[test]
fn empty_window_is_partial_success() {
    let out = tempfile::tempdir().unwrap();
    let o = wavefit(
        &[
            "fit",
            "--waves",
            "2019w10:2019w20",
            "--format",
            "csv",
            "--out",
            out.path().to_str().unwrap(),
        ],
        &input_paths(),
    );
    assert_eq!(o.status.code(), Some(4));
    let fits = fs::read_to_string(out.path().join("fits.csv")).unwrap();
    assert!(fits
        .lines()
        .skip(1)
        .all(|l| l.contains("insufficient_data")));
    assert!(fs::read_dir(out.path().join("quarantine")).unwrap().count() > 0);
    assert!(fs::read_to_string(out.path().join("beta_signs.csv"))
        .unwrap()
        .contains(",NA,"));
}

#[test]
fn beta_markdown_layout() {
    let out = tempfile::tempdir().unwrap();
    let o = wavefit(
        &[
            "fit",
            "--waves",
            WAVES,
            "--format",
            "md",
            "--out",
            out.path().to_str().unwrap(),
        ],
        &input_paths(),
    );
    assert_eq!(o.status.code(), Some(0));
    let md = fs::read_to_string(out.path().join("beta_signs.md")).unwrap();
    let rows: Vec<&str> = md.lines().skip(2).collect();
    assert_eq!(rows[0], "| UK | + | - | - |");
    let homes = rows.iter().position(|r| r.starts_with("| Homes")).unwrap();
    let care = rows
        .iter()
        .position(|r| r.starts_with("| Care Homes"))
        .unwrap();
    let hosp = rows
        .iter()
        .position(|r| r.starts_with("| Hospitals"))
        .unwrap();
    assert!(homes < care && care < hosp);
}

/// England and Wales with one national curve each, Wales's mode `shift` weeks
/// later. The location is pinned to the window start, so the mode is moved
/// through α rather than by translating the curve.
fn shifted_nations(dir: &Path, shift: f64) -> Vec<PathBuf> {
    let start = WeekIndex::new(2020, 10).unwrap();
    let weeks: Vec<WeekIndex> = (0..29).map(|k| start.offset(k)).collect();
    let mut files = Vec::new();
    let x_mode = WeibullParams::<f64>::mode_x(2.0).unwrap();
    for (nation, s) in [("England", 0.0), ("Wales", shift)] {
        let curve = WeibullParams::new(100.0, 7.0 + s / x_mode, 2.0, start.ordinal as f64).unwrap();
        let total = 1_000_000_000u64;
        files.push(weekly_file(
            dir,
            &format!("{nation}_t.csv"),
            nation,
            "TotalDeaths",
            &weeks,
            |_, _| total.to_string(),
        ));
        files.push(weekly_file(
            dir,
            &format!("{nation}_c.csv"),
            nation,
            "CovidDeaths",
            &weeks,
            |w, _| {
                ((total as f64 * curve.eval(w.ordinal as f64) / 100.0).round() as u64).to_string()
            },
        ));
    }
    files
}

#[test]
fn compare_self_is_zero() {
    let o = wavefit(
        &[
            "compare",
            "--nations",
            "Scotland",
            "--waves",
            WAVES,
            "--format",
            "csv",
        ],
        &input_paths(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    for line in out.lines().skip(1) {
        assert!(line.ends_with(",0,0"), "{line}");
    }
    assert_eq!(out.lines().count(), 4);
}

#[test]
fn compare_detects_one_week_shift() {
    let dir = tempfile::tempdir().unwrap();
    let o = wavefit(
        &[
            "compare",
            "--nations",
            "England,Wales",
            "--waves",
            "2020w10:2020w38",
            "--format",
            "json",
        ],
        &shifted_nations(dir.path(), 1.0),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    let wales = rows.iter().find(|r| r["nation"] == "Wales").unwrap();
    assert!(
        (wales["lag_weeks"].as_f64().unwrap() - 1.0).abs() <= 0.1 + 1e-9,
        "{wales}"
    );
}

#[test]
fn compare_unknown_nation_fails() {
    let o = wavefit(
        &["compare", "--nations", "Wales", "--waves", WAVES],
        &input_paths(),
    );
    assert_eq!(o.status.code(), Some(3));
}
