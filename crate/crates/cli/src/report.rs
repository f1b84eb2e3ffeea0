//! CSV and JSON output of benchmark sweeps.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bench::{BenchOutcome, RunRecord, Scene, Variant};
use crate::config::BenchConfig;
use crate::error::Result;

pub const CSV_HEADER: [&str; 7] = ["method", "scene", "run", "error_rms", "time_ms", "samples", "failed"];

/// Scene label of the aggregate pooled over all scenes.
pub const POOLED_SCENE: &str = "ALL";

/// `x` rounded to six significant digits, printed without trailing zeros.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Summary statistics of one method over one scene, or over all scenes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub method: String,
    pub scene: String,
    pub runs: usize,
    /// Mean over runs with a finite error.
    pub mean_error_rms: f64,
    pub median_error_rms: f64,
    pub mean_time_ms: f64,
    pub median_time_ms: f64,
    pub mean_samples: f64,
    pub median_samples: f64,
    pub failure_rate: f64,
}

impl Aggregate {
    fn from_records(method: &str, scene: &str, records: &[&RunRecord]) -> Self {
        let errors: Vec<f64> = records.iter().map(|r| r.error_rms).filter(|e| e.is_finite()).collect();
        let times: Vec<f64> = records.iter().map(|r| r.time_ms).collect();
        let samples: Vec<f64> = records.iter().map(|r| r.samples as f64).collect();
        let failures = records.iter().filter(|r| r.failed).count();
        Self {
            method: method.to_string(),
            scene: scene.to_string(),
            runs: records.len(),
            mean_error_rms: mean(&errors),
            median_error_rms: median(&errors),
            mean_time_ms: mean(&times),
            median_time_ms: median(&times),
            mean_samples: mean(&samples),
            median_samples: median(&samples),
            failure_rate: failures as f64 / records.len().max(1) as f64,
        }
    }
}

/// One aggregate per `(variant, scene)`, then per variant over all scenes
/// when there is more than one scene.
pub fn aggregate(records: &[RunRecord], variants: &[Variant], scenes: &[Scene]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for v in variants {
        for s in scenes {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.method == v.name && r.scene == s.name).collect();
            out.push(Aggregate::from_records(&v.name, &s.name, &rows));
        }
    }
    if scenes.len() > 1 {
        for v in variants {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.method == v.name).collect();
            out.push(Aggregate::from_records(&v.name, POOLED_SCENE, &rows));
        }
    }
    out
}

/// Per-run rows followed by one `mean` row per aggregate, whose `failed`
/// column holds the failure rate.
pub fn write_runs_csv<W: Write>(w: W, records: &[RunRecord], aggregates: &[Aggregate]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(CSV_HEADER)?;
    for r in records {
        csv.write_record([
            r.method.clone(),
            r.scene.clone(),
            r.run.to_string(),
            format_sig(r.error_rms),
            format_sig(r.time_ms),
            r.samples.to_string(),
            r.failed.to_string(),
        ])?;
    }
    for a in aggregates {
        csv.write_record([
            a.method.clone(),
            a.scene.clone(),
            "mean".to_string(),
            format_sig(a.mean_error_rms),
            format_sig(a.mean_time_ms),
            format_sig(a.mean_samples),
            format_sig(a.failure_rate),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, aggregates: &[Aggregate]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "method",
        "scene",
        "runs",
        "mean_error_rms",
        "median_error_rms",
        "mean_time_ms",
        "median_time_ms",
        "mean_samples",
        "median_samples",
        "failure_rate",
    ])?;
    for a in aggregates {
        csv.write_record([
            a.method.clone(),
            a.scene.clone(),
            a.runs.to_string(),
            format_sig(a.mean_error_rms),
            format_sig(a.median_error_rms),
            format_sig(a.mean_time_ms),
            format_sig(a.median_time_ms),
            format_sig(a.mean_samples),
            format_sig(a.median_samples),
            format_sig(a.failure_rate),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Sidecar path `<out>.<suffix>`.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct Provenance<'a> {
    config: &'a BenchConfig,
    variants: &'a [Variant],
    scenes: &'a [Scene],
    records: usize,
    failures: &'a [crate::bench::RunFailure],
}

/// Writes the run table to `out` (or stdout), and with a path also
/// `<out>.summary.csv` and the `<out>.json` configuration sidecar.
pub fn write_outputs(
    out: Option<&Path>,
    cfg: &BenchConfig,
    variants: &[Variant],
    scenes: &[Scene],
    outcome: &BenchOutcome,
) -> Result<()> {
    let aggregates = aggregate(&outcome.records, variants, scenes);
    let Some(path) = out else {
        return write_runs_csv(std::io::stdout().lock(), &outcome.records, &aggregates);
    };
    write_runs_csv(std::fs::File::create(path)?, &outcome.records, &aggregates)?;
    write_summary_csv(std::fs::File::create(sidecar(path, "summary.csv"))?, &aggregates)?;
    let provenance = Provenance {
        config: cfg,
        variants,
        scenes,
        records: outcome.records.len(),
        failures: &outcome.failures,
    };
    let json = serde_json::to_string_pretty(&provenance)?;
    std::fs::write(sidecar(path, "json"), json + "\n")?;
    Ok(())
}
