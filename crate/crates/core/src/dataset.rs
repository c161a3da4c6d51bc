//! Tabular regression data: CSV ingestion, z-scoring, correlation-based
//! source/target splitting and K-fold assignment.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A feature matrix (one row per instance) with its regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    targets: Array1<f64>,
    feature_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        targets: Array1<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: targets.len(),
            });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: feature_names.len(),
            });
        }
        if n == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if d == 0 {
            return Err(Error::Empty("dataset has no feature columns".into()));
        }
        for ((row, col), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: feature_names[col].clone(),
                });
            }
        }
        let target_name = target_name.into();
        if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row,
                column: target_name,
            });
        }
        Ok(Dataset {
            features,
            targets,
            feature_names,
            target_name,
        })
    }

    /// Builds a dataset from row slices with generated names `x0..`, `y`.
    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut features = Array2::zeros((rows.len(), d));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                features[[i, j]] = v;
            }
        }
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Dataset::new(features, Array1::from(targets.to_vec()), names, "y")
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn targets(&self) -> ArrayView1<'_, f64> {
        self.targets.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Rows in the given order (duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            targets: self.targets.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }

    /// Stacks `other` below `self`. Column names must agree.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.feature_names != other.feature_names || self.target_name != other.target_name {
            return Err(Error::param("cannot concatenate datasets with different columns"));
        }
        let features = ndarray::concatenate(Axis(0), &[self.features.view(), other.features.view()])
            .expect("column counts checked");
        let targets =
            ndarray::concatenate(Axis(0), &[self.targets.view(), other.targets.view()]).expect("1-d concat");
        Ok(Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        })
    }

    pub(crate) fn with_features(&self, features: Array2<f64>) -> Dataset {
        debug_assert_eq!(features.dim(), self.features.dim());
        Dataset {
            features,
            targets: self.targets.clone(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }
}

/// Reads a headed, comma-delimited numeric CSV. Every column other than
/// `target_column` becomes a feature, in header order.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };

    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = BTreeMap::new();
    for name in &header {
        if seen.insert(name.as_str(), ()).is_some() {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;

    let d = header.len() - 1;
    let mut values: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = row + 1;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: header.get(record.len()).cloned().unwrap_or_default(),
                value: String::new(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: header[col].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: header[col].clone(),
                });
            }
            if col == target_idx {
                targets.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = targets.len();
    let features = Array2::from_shape_vec((n, d), values).expect("row lengths checked");
    let feature_names = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::new(features, Array1::from(targets), feature_names, target_column)
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ColumnStats {
    mean: f64,
    std: f64,
}

impl Standardization {
    pub fn fit(ds: &Dataset) -> Self {
        let (mean, std) = column_moments(ds.features());
        Standardization {
            feature_names: ds.feature_names().to_vec(),
            mean,
            std,
        }
    }

    pub fn transform_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            if s > 0.0 {
                col.mapv_inplace(|v| (v - m) / s);
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }

    /// Inverse affine map. Zero-variance columns come back as their mean.
    pub fn inverse_matrix(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: z.ncols(),
            });
        }
        let mut out = z.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }

    /// `{feature_name: {"mean": .., "std": ..}}`
    pub fn to_json(&self) -> Result<String> {
        let map: BTreeMap<&str, ColumnStats> = self
            .feature_names
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(name, (&mean, &std))| (name.as_str(), ColumnStats { mean, std }))
            .collect();
        Ok(serde_json::to_string_pretty(&map)?)
    }

    /// Parses the JSON form, ordering columns by `feature_names`.
    pub fn from_json(json: &str, feature_names: &[String]) -> Result<Self> {
        let mut map: BTreeMap<String, ColumnStats> = serde_json::from_str(json)?;
        if map.len() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                actual: map.len(),
            });
        }
        let mut mean = Vec::with_capacity(map.len());
        let mut std = Vec::with_capacity(map.len());
        for name in feature_names {
            let stats = map
                .remove(name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?;
            mean.push(stats.mean);
            std.push(stats.std);
        }
        Ok(Standardization {
            feature_names: feature_names.to_vec(),
            mean,
            std,
        })
    }
}

pub(crate) fn column_moments(x: ArrayView2<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    x.axis_iter(Axis(1))
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .unzip()
}

/// Z-scores every feature column. When `stats` is `None` they are fit on
/// `ds`; the returned statistics can be reapplied to held-out data.
pub fn standardize(ds: &Dataset, stats: Option<&Standardization>) -> Result<(Dataset, Standardization)> {
    let stats = match stats {
        Some(s) => {
            if s.mean.len() != ds.n_features() || s.std.len() != ds.n_features() {
                return Err(Error::DimensionMismatch {
                    expected: ds.n_features(),
                    actual: s.mean.len(),
                });
            }
            s.clone()
        }
        None => Standardization::fit(ds),
    };
    let z = stats.transform_matrix(ds.features())?;
    Ok((ds.with_features(z), stats))
}

/// Pearson product-moment correlation.
pub fn pearson_correlation(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty("correlation needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.sum() / n;
    let my = y.sum() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 {
        return Err(Error::ZeroVariance("first vector".into()));
    }
    if syy <= 0.0 {
        return Err(Error::ZeroVariance("second vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Source/target partition of one dataset along a split feature.
#[derive(Debug, Clone)]
pub struct TransferSplit {
    pub source: Dataset,
    pub target: Dataset,
    pub split_feature: String,
    /// `bins + 1` values: the minimum, the first split value of each later
    /// bin, and the maximum.
    pub bin_edges: Vec<f64>,
    /// Pearson r of the split feature with the target.
    pub correlation: f64,
}

/// Picks the feature whose |r| with the target is nearest 0.5. Ties go to
/// the lower column index; constant columns are skipped.
pub fn select_split_feature(ds: &Dataset) -> Result<usize> {
    let y = ds.targets();
    let mut best: Option<(usize, f64)> = None;
    for j in 0..ds.n_features() {
        let Ok(r) = pearson_correlation(ds.features().column(j), y) else {
            continue;
        };
        let gap = (r.abs() - 0.5).abs();
        if best.is_none_or(|(_, g)| gap < g) {
            best = Some((j, gap));
        }
    }
    best.map(|(j, _)| j)
        .ok_or_else(|| Error::Degenerate("no non-constant feature correlates with the target".into()))
}

/// Row order used for quantile binning: split value first, then the rest of
/// the row's content, then the original index. Rows with equal content are
/// interchangeable, so the resulting partition does not depend on input order.
fn binning_order(ds: &Dataset, feature: usize) -> Vec<usize> {
    let x = ds.features();
    let y = ds.targets();
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.sort_by(|&a, &b| {
        x[[a, feature]]
            .total_cmp(&x[[b, feature]])
            .then_with(|| {
                x.row(a)
                    .iter()
                    .zip(x.row(b).iter())
                    .map(|(u, v)| u.total_cmp(v))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| y[a].total_cmp(&y[b]))
            .then_with(|| a.cmp(&b))
    });
    order
}

fn check_split_feature(ds: &Dataset, split_feature: Option<&str>) -> Result<(usize, f64)> {
    let feature = match split_feature {
        Some(name) => ds.feature_index(name)?,
        None => select_split_feature(ds)?,
    };
    let r = pearson_correlation(ds.features().column(feature), ds.targets()).map_err(|e| match e {
        Error::ZeroVariance(_) => {
            Error::ZeroVariance(format!("split feature `{}`", ds.feature_names()[feature]))
        }
        other => other,
    })?;
    Ok((feature, r))
}

/// Equal-frequency binning on the split feature: the lowest bin is the
/// target, the union of the others is the source.
pub fn correlation_split(ds: &Dataset, split_feature: Option<&str>, bins: usize) -> Result<TransferSplit> {
    if bins < 2 {
        return Err(Error::param("bins must be at least 2"));
    }
    let n = ds.n_rows();
    if bins > n {
        return Err(Error::param(format!("bins ({bins}) exceeds row count ({n})")));
    }
    let (feature, r) = check_split_feature(ds, split_feature)?;
    let order = binning_order(ds, feature);
    let bounds: Vec<usize> = (0..=bins).map(|b| b * n / bins).collect();
    let x = ds.features();
    let mut bin_edges = vec![x[[order[0], feature]]];
    for &start in &bounds[1..bins] {
        bin_edges.push(x[[order[start], feature]]);
    }
    bin_edges.push(x[[order[n - 1], feature]]);

    let mut target_rows = order[..bounds[1]].to_vec();
    let mut source_rows = order[bounds[1]..].to_vec();
    target_rows.sort_unstable();
    source_rows.sort_unstable();
    Ok(TransferSplit {
        source: ds.select_rows(&source_rows),
        target: ds.select_rows(&target_rows),
        split_feature: ds.feature_names()[feature].clone(),
        bin_edges,
        correlation: r,
    })
}

/// Like [`correlation_split`] with two bins, but the target takes exactly
/// the `target_rows` lowest rows along the split feature.
pub fn quantile_split(
    ds: &Dataset,
    split_feature: Option<&str>,
    target_rows: usize,
) -> Result<TransferSplit> {
    let n = ds.n_rows();
    if target_rows == 0 || target_rows >= n {
        return Err(Error::param(format!(
            "target size {target_rows} must lie in [1, {})",
            n
        )));
    }
    let (feature, r) = check_split_feature(ds, split_feature)?;
    let order = binning_order(ds, feature);
    let x = ds.features();
    let bin_edges = vec![
        x[[order[0], feature]],
        x[[order[target_rows], feature]],
        x[[order[n - 1], feature]],
    ];
    let mut t = order[..target_rows].to_vec();
    let mut s = order[target_rows..].to_vec();
    t.sort_unstable();
    s.sort_unstable();
    Ok(TransferSplit {
        source: ds.select_rows(&s),
        target: ds.select_rows(&t),
        split_feature: ds.feature_names()[feature].clone(),
        bin_edges,
        correlation: r,
    })
}

/// Fold index per instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub folds: usize,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle followed by contiguous assignment; the first `n % folds`
/// folds get one extra instance.
pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<FoldAssignment> {
    if folds < 2 || folds > n {
        return Err(Error::param(format!("fold count {folds} must lie in [2, {n}]")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    let (base, extra) = (n / folds, n % folds);
    let mut pos = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        for &i in &perm[pos..pos + size] {
            fold_of[i] = f;
        }
        pos += size;
    }
    Ok(FoldAssignment { fold_of, folds })
}
