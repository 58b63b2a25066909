//! Persistence: `runs.json` for raw data, CSV for reports.
//!
//! CSV floats use `{:.16e}`, enough digits to round-trip an f64. Missing values are empty
//! fields.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{ExperimentData, ExperimentReport, HarnessError, SweepPoint};

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

pub fn write_runs_json(path: &Path, data: &ExperimentData) -> Result<(), HarnessError> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, data)?;
    Ok(())
}

pub fn read_runs_json(path: &Path) -> Result<ExperimentData, HarnessError> {
    let data: ExperimentData = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    data.config.validate()?;
    Ok(data)
}

pub fn write_report_csv(path: &Path, report: &ExperimentReport) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "filter", "rmse", "reduction_pct", "retained_runs", "retained_samples", "eps0_source"])?;
    for r in &report.rows {
        w.write_record([
            r.method.name().to_string(),
            r.filter.name().to_string(),
            opt_float(r.rmse),
            opt_float(r.reduction_pct),
            r.retained_runs.to_string(),
            r.retained_samples.to_string(),
            match r.eps0_source {
                Some(crate::scaling::EstimateSource::Measured) => "measured".into(),
                Some(crate::scaling::EstimateSource::Calibration) => "calibration".into(),
                None => String::new(),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples_csv(path: &Path, report: &ExperimentReport) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run", "method", "filter", "lambda_index", "lambda", "twirl", "x", "value", "retained", "reason"])?;
    for s in &report.samples {
        w.write_record([
            s.run_id.to_string(),
            s.method.name().to_string(),
            s.filter.name().to_string(),
            s.lambda_index.to_string(),
            s.lambda.to_string(),
            s.twirl.to_string(),
            float(s.x),
            float(s.value),
            s.retained.to_string(),
            s.reason.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["xi", "method", "filter", "rmse", "reduction_pct", "mean_lambda_max", "mean_value_at_max_lambda"])?;
    for p in points {
        w.write_record([
            float(p.xi),
            p.method.name().to_string(),
            p.filter.name().to_string(),
            opt_float(p.rmse),
            opt_float(p.reduction_pct),
            float(p.mean_lambda_max),
            float(p.mean_value_at_max_lambda),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Full report including per-run estimates.
pub fn write_report_json(path: &Path, report: &ExperimentReport) -> Result<(), HarnessError> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, report)?;
    Ok(())
}

/// Writes `runs.json`, `report.json`, `report.csv` and `samples.csv` into `dir`, creating it if
/// needed.
pub fn write_outputs(dir: &Path, data: &ExperimentData, report: &ExperimentReport) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    write_runs_json(&dir.join("runs.json"), data)?;
    write_report_outputs(dir, report)
}

/// Writes `report.json`, `report.csv` and `samples.csv` into `dir`.
pub fn write_report_outputs(dir: &Path, report: &ExperimentReport) -> Result<(), HarnessError> {
    write_report_json(&dir.join("report.json"), report)?;
    write_report_csv(&dir.join("report.csv"), report)?;
    write_samples_csv(&dir.join("samples.csv"), report)?;
    Ok(())
}
