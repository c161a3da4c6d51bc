//! CSV and manifest writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use stboost_core::complexity::ComplexityReport;
use stboost_core::Dataset;

use crate::config::ExperimentConfig;
use crate::harness::{Aborted, DatasetInfo, ResultTable};

pub const TOOL: &str = "stboost";

/// Config echo plus what the run saw. Contains nothing time-dependent, so
/// a rerun from it writes an identical manifest.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub protocol: String,
    pub config: &'a ExperimentConfig,
    pub datasets: &'a [DatasetInfo],
    pub aborted: &'a [Aborted],
}

impl<'a> Manifest<'a> {
    pub fn new(
        command: &'a str,
        config: &'a ExperimentConfig,
        datasets: &'a [DatasetInfo],
        aborted: &'a [Aborted],
    ) -> Self {
        let protocol = format!(
            "iteration i tests on fold (i mod {f}) of a {f}-fold shuffle of the target, reshuffled every {f} iterations; the other folds are target training data",
            f = config.outer_folds
        );
        Manifest {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.seed,
            protocol,
            config,
            datasets,
            aborted,
        }
    }
}

fn create(path: &Path) -> anyhow::Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write_results_csv(table: &ResultTable, w: impl Write) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dataset", "setting", "algorithm", "iteration", "rmse", "r2"])?;
    for r in &table.rows {
        out.write_record([
            r.dataset.clone(),
            r.setting.clone(),
            r.algorithm.to_string(),
            r.iteration.to_string(),
            r.rmse.to_string(),
            r.r2.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv(table: &ResultTable, w: impl Write) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dataset",
        "setting",
        "algorithm",
        "iterations",
        "rmse_mean",
        "rmse_median",
        "rmse_q1",
        "rmse_q3",
        "rmse_iqr",
        "r2_mean",
        "r2_median",
        "r2_q1",
        "r2_q3",
        "r2_iqr",
    ])?;
    for s in &table.summary {
        let mut rec = vec![
            s.dataset.clone(),
            s.setting.clone(),
            s.algorithm.to_string(),
            s.iterations.to_string(),
        ];
        for m in [&s.rmse, &s.r2] {
            rec.extend([m.mean, m.median, m.q1, m.q3, m.iqr].iter().map(f64::to_string));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_timings_csv(table: &ResultTable, w: impl Write) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dataset",
        "setting",
        "algorithm",
        "iteration",
        "wall_time_seconds",
    ])?;
    for r in &table.rows {
        out.write_record([
            r.dataset.clone(),
            r.setting.clone(),
            r.algorithm.to_string(),
            r.iteration.to_string(),
            format!("{:.6}", r.wall_time_seconds),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_complexity_csv(reports: &[(String, ComplexityReport)], w: impl Write) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ComplexityReport::CSV_HEADER)?;
    for (name, r) in reports {
        out.write_record(r.csv_row(name))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    header.push(ds.target_name());
    out.write_record(&header)?;
    for (row, y) in ds.features().rows().into_iter().zip(ds.targets().iter()) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(y.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_manifest(manifest: &Manifest<'_>, path: &Path) -> anyhow::Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, manifest)?;
    writeln!(f)?;
    Ok(())
}

/// Writes results.csv, summary.csv, timings.csv and manifest.json into `dir`.
pub fn write_run(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    outcome: &crate::harness::RunOutcome,
) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let paths: Vec<PathBuf> = ["results.csv", "summary.csv", "timings.csv", "manifest.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_results_csv(&outcome.table, create(&paths[0])?)?;
    write_summary_csv(&outcome.table, create(&paths[1])?)?;
    write_timings_csv(&outcome.table, create(&paths[2])?)?;
    write_manifest(
        &Manifest::new(command, config, &outcome.datasets, &outcome.aborted),
        &paths[3],
    )?;
    Ok(paths)
}
