//! Experiment runners: comparative, ablation, negative transfer and
//! complexity.

use std::hash::Hasher;
use std::time::Instant;

use fnv::FnvHasher;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use stboost_core::complexity::ComplexityReport;
use stboost_core::{
    build_pool, complexity_report, correlation_split, fit_adaboost_r2, fit_strada, fit_ttr2, kfold, load_csv,
    quantile_split, r_squared, rmse, Dataset, SamplingConfig, TrainingPool, TransferSplit,
};

use crate::config::{Algorithm, DatasetSpec, ExperimentConfig};
use crate::stats::{summarize, Summary};

/// Derives a cell seed from the run seed and a path of labels (FNV-1a over
/// the little-endian seed and each label, with a separator byte).
pub fn cell_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&seed.to_le_bytes());
    for p in parts {
        h.write(p.as_bytes());
        h.write_u8(0xff);
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub dataset: String,
    /// `default`, `ablated`, or the target fraction for negative-transfer runs.
    pub setting: String,
    pub algorithm: Algorithm,
    pub iteration: usize,
    pub rmse: f64,
    pub r2: f64,
    /// Excluded from results.csv, which must be reproducible byte for byte.
    #[serde(skip)]
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub setting: String,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub rmse: Summary,
    pub r2: Summary,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

fn row_key(r: &ResultRow) -> (&str, &str, Algorithm, usize) {
    (&r.dataset, &r.setting, r.algorithm, r.iteration)
}

impl ResultTable {
    /// Sorts rows by (dataset, setting, algorithm, iteration) and summarises
    /// each group.
    pub fn from_rows(mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(|a, b| row_key(a).cmp(&row_key(b)));
        let mut summary = Vec::new();
        let mut start = 0;
        while start < rows.len() {
            let head = &rows[start];
            let end = start
                + rows[start..]
                    .iter()
                    .take_while(|r| {
                        r.dataset == head.dataset
                            && r.setting == head.setting
                            && r.algorithm == head.algorithm
                    })
                    .count();
            let group = &rows[start..end];
            let rm: Vec<f64> = group.iter().map(|r| r.rmse).collect();
            let r2: Vec<f64> = group.iter().map(|r| r.r2).collect();
            summary.push(SummaryRow {
                dataset: head.dataset.clone(),
                setting: head.setting.clone(),
                algorithm: head.algorithm,
                iterations: group.len(),
                rmse: summarize(&rm),
                r2: summarize(&r2),
            });
            start = end;
        }
        ResultTable { rows, summary }
    }

    pub fn summary_for(&self, dataset: &str, setting: &str, algorithm: Algorithm) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.dataset == dataset && s.setting == setting && s.algorithm == algorithm)
    }

    pub fn mean_rmse(&self, dataset: &str, setting: &str, algorithm: Algorithm) -> Option<f64> {
        self.summary_for(dataset, setting, algorithm).map(|s| s.rmse.mean)
    }
}

/// What a run did to each dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub setting: String,
    pub rows: usize,
    pub source_rows: usize,
    pub target_rows: usize,
    pub split_feature: String,
    pub bin_edges: Vec<f64>,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aborted {
    pub dataset: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub table: ResultTable,
    pub datasets: Vec<DatasetInfo>,
    pub aborted: Vec<Aborted>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Comparative,
    Ablation,
    Negative,
}

struct Prepared {
    spec_name: String,
    setting: String,
    split: TransferSplit,
}

pub fn load_dataset(spec: &DatasetSpec) -> anyhow::Result<Dataset> {
    anyhow::ensure!(spec.path.exists(), "data file {} not found", spec.path.display());
    Ok(load_csv(&spec.path, &spec.target)?)
}

fn info_of(p: &Prepared) -> DatasetInfo {
    DatasetInfo {
        name: p.spec_name.clone(),
        setting: p.setting.clone(),
        rows: p.split.source.n_rows() + p.split.target.n_rows(),
        source_rows: p.split.source.n_rows(),
        target_rows: p.split.target.n_rows(),
        split_feature: p.split.split_feature.clone(),
        bin_edges: p.split.bin_edges.clone(),
        correlation: p.split.correlation,
    }
}

/// Target rows giving the target a share `fraction` of all training rows
/// once one outer fold of the target is held out for testing.
pub fn target_rows_for_fraction(n: usize, fraction: f64, outer_folds: usize) -> usize {
    let f = outer_folds as f64;
    let t = fraction * n as f64 / (1.0 - (1.0 - fraction) / f);
    (t.round() as usize).clamp(outer_folds, n - 1)
}

fn prepare(config: &ExperimentConfig, mode: Mode, aborted: &mut Vec<Aborted>) -> Vec<Prepared> {
    let mut out = Vec::new();
    for spec in &config.datasets {
        let result: anyhow::Result<Vec<Prepared>> = (|| {
            let ds = load_dataset(spec)?;
            let split_feature = spec.split_feature.as_deref();
            match mode {
                Mode::Negative => config
                    .target_fractions
                    .iter()
                    .map(|&f| {
                        let t = target_rows_for_fraction(ds.n_rows(), f, config.outer_folds);
                        Ok(Prepared {
                            spec_name: spec.name.clone(),
                            setting: format!("{f}"),
                            split: quantile_split(&ds, split_feature, t)?,
                        })
                    })
                    .collect(),
                _ => Ok(vec![Prepared {
                    spec_name: spec.name.clone(),
                    setting: if mode == Mode::Ablation {
                        "ablated"
                    } else {
                        "default"
                    }
                    .to_string(),
                    split: correlation_split(&ds, split_feature, config.bins)?,
                }]),
            }
        })();
        match result {
            Ok(p) => out.extend(p),
            Err(e) => {
                warn!("dataset {} aborted: {e:#}", spec.name);
                aborted.push(Aborted {
                    dataset: spec.name.clone(),
                    reason: format!("{e:#}"),
                });
            }
        }
    }
    out
}

fn sampling_for(config: &ExperimentConfig, n: usize, m: usize, seed: u64, mode: Mode) -> SamplingConfig {
    let defaults = SamplingConfig::defaults_for(n, m, seed);
    let mut k = config.sampling.k.unwrap_or(defaults.k);
    if mode == Mode::Ablation && m < config.sampling.small_target_cutoff {
        k = 0;
    }
    SamplingConfig {
        p: config.sampling.p.unwrap_or(defaults.p).min(n),
        k: k.min(m),
        seed,
        standardize: config.sampling.standardize,
        metric: config.sampling.metric,
    }
}

fn run_cell(
    config: &ExperimentConfig,
    mode: Mode,
    prep: &Prepared,
    iteration: usize,
) -> anyhow::Result<Vec<ResultRow>> {
    let name = prep.spec_name.as_str();
    let setting = prep.setting.as_str();
    let target = &prep.split.target;
    let source = &prep.split.source;
    let folds_n = config.outer_folds;
    // Comparative and ablation runs share splits and seeds, so their rows pair up.
    let key = if mode == Mode::Negative {
        setting
    } else {
        "default"
    };
    let cycle = (iteration / folds_n).to_string();
    let outer = kfold(
        target.n_rows(),
        folds_n,
        cell_seed(config.seed, &[name, key, "outer", &cycle]),
    )?;
    let test_idx = outer.test_indices(iteration % folds_n);
    let train_idx = outer.train_indices(iteration % folds_n);
    let train = target.select_rows(&train_idx);
    let test = target.select_rows(&test_idx);
    let actual = test.targets().to_vec();

    let seed = cell_seed(config.seed, &[name, key, "cell", &iteration.to_string()]);
    let strada_cfg = stboost_core::StradaConfig {
        seed,
        ..config.strada
    };
    let sampling = sampling_for(config, source.n_rows(), train.n_rows(), seed, mode);
    let sampled_pool = || -> anyhow::Result<TrainingPool> { Ok(build_pool(source, &train, &sampling)?) };

    let mut rows = Vec::new();
    for &alg in &config.algorithms {
        let started = Instant::now();
        let predictions = match (alg, mode) {
            (Algorithm::AdaboostR2, Mode::Ablation) => {
                let pool = sampled_pool()?;
                boost_predict(&pool, &strada_cfg, &test)?
            }
            (Algorithm::AdaboostR2, _) => {
                boost_predict(&TrainingPool::target_only(&train), &strada_cfg, &test)?
            }
            (Algorithm::Ttr2, Mode::Ablation) => {
                fit_ttr2(&sampled_pool()?, &strada_cfg)?.predict_matrix(test.features())?
            }
            (Algorithm::Ttr2, _) => fit_ttr2(&TrainingPool::concat(source, &train)?, &strada_cfg)?
                .predict_matrix(test.features())?,
            (Algorithm::Strada, _) => {
                fit_strada(&sampled_pool()?, &strada_cfg)?.predict_matrix(test.features())?
            }
        };
        let wall = started.elapsed().as_secs_f64();
        let r2 = r_squared(&predictions, &actual).unwrap_or_else(|e| {
            warn!("{name}/{setting}/{alg}/{iteration}: r2 undefined ({e})");
            f64::NAN
        });
        rows.push(ResultRow {
            dataset: name.to_string(),
            setting: setting.to_string(),
            algorithm: alg,
            iteration,
            rmse: rmse(&predictions, &actual)?,
            r2,
            wall_time_seconds: wall,
        });
    }
    Ok(rows)
}

fn boost_predict(
    pool: &TrainingPool,
    cfg: &stboost_core::StradaConfig,
    test: &Dataset,
) -> anyhow::Result<Vec<f64>> {
    let n = pool.len();
    let w = vec![1.0 / n as f64; n];
    let ens = fit_adaboost_r2(
        pool.x.view(),
        pool.y.view(),
        &w,
        cfg.estimators,
        cfg.loss,
        cfg.tree,
        cfg.seed,
    )?;
    Ok(ens.predict_matrix(test.features())?)
}

fn run(config: &ExperimentConfig, mode: Mode, sequential: bool) -> anyhow::Result<RunOutcome> {
    config.validate()?;
    let mut aborted = Vec::new();
    let prepared = prepare(config, mode, &mut aborted);
    let cells: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|d| (0..config.iterations).map(move |i| (d, i)))
        .collect();
    info!("{} cells over {} dataset settings", cells.len(), prepared.len());
    let work = |&(d, i): &(usize, usize)| (d, run_cell(config, mode, &prepared[d], i));
    let results: Vec<(usize, anyhow::Result<Vec<ResultRow>>)> = if sequential {
        cells.iter().map(work).collect()
    } else {
        cells.par_iter().map(work).collect()
    };

    let mut failed = vec![None; prepared.len()];
    let mut rows = Vec::new();
    for (d, r) in results {
        match r {
            Ok(r) => rows.extend(r),
            Err(e) => {
                if failed[d].is_none() {
                    failed[d] = Some(format!("{e:#}"));
                }
            }
        }
    }
    let mut datasets = Vec::new();
    for (d, prep) in prepared.iter().enumerate() {
        match &failed[d] {
            Some(reason) => {
                warn!("dataset {} ({}) aborted: {reason}", prep.spec_name, prep.setting);
                rows.retain(|r| !(r.dataset == prep.spec_name && r.setting == prep.setting));
                aborted.push(Aborted {
                    dataset: prep.spec_name.clone(),
                    reason: reason.clone(),
                });
            }
            None => datasets.push(info_of(prep)),
        }
    }
    aborted.sort_by(|a, b| a.dataset.cmp(&b.dataset).then(a.reason.cmp(&b.reason)));
    Ok(RunOutcome {
        table: ResultTable::from_rows(rows),
        datasets,
        aborted,
    })
}

/// Source/target split per dataset, K-fold target train/test per
/// iteration; strada gets the sampled pool, the others the raw data
/// (adaboost_r2 sees the target only).
pub fn run_comparative(config: &ExperimentConfig, sequential: bool) -> anyhow::Result<RunOutcome> {
    run(config, Mode::Comparative, sequential)
}

/// As [`run_comparative`], but every algorithm trains on the sampled pool.
/// k-center sampling is skipped for small targets.
pub fn run_ablation(config: &ExperimentConfig, sequential: bool) -> anyhow::Result<RunOutcome> {
    run(config, Mode::Ablation, sequential)
}

/// One setting per target fraction: the target is the lowest slice of the
/// split feature sized so that its training part is that share of all
/// training rows.
pub fn run_negative_transfer(config: &ExperimentConfig, sequential: bool) -> anyhow::Result<RunOutcome> {
    run(config, Mode::Negative, sequential)
}

#[derive(Debug, Clone, Default)]
pub struct ComplexityOutcome {
    pub reports: Vec<(String, ComplexityReport)>,
    pub aborted: Vec<Aborted>,
}

pub fn run_complexity(config: &ExperimentConfig) -> ComplexityOutcome {
    let mut out = ComplexityOutcome::default();
    for spec in &config.datasets {
        match load_dataset(spec).and_then(|ds| Ok(complexity_report(&ds, &config.complexity)?)) {
            Ok(r) => out.reports.push((spec.name.clone(), r)),
            Err(e) => {
                warn!("dataset {} aborted: {e:#}", spec.name);
                out.aborted.push(Aborted {
                    dataset: spec.name.clone(),
                    reason: format!("{e:#}"),
                });
            }
        }
    }
    out
}
