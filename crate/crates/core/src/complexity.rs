//! Regression-dataset complexity measures: feature efficiency (`c_fe`),
//! linearity (`d_l`) and input smoothness (`d_i`).

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{column_moments, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.1;

/// How a column is rescaled before a measure is computed. Constant columns
/// become all zeros under `MinMax` and `ZScore`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    MinMax,
    ZScore,
    Raw,
}

impl std::str::FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "min-max" => Ok(Scaling::MinMax),
            "zscore" | "z-score" | "z" => Ok(Scaling::ZScore),
            "raw" | "none" => Ok(Scaling::Raw),
            other => Err(Error::param(format!("unknown scaling '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scaling::MinMax => "minmax",
            Scaling::ZScore => "zscore",
            Scaling::Raw => "raw",
        })
    }
}

/// Normalisation applied by each measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// Target scaling inside `c_fe`.
    pub cfe_target: Scaling,
    /// Target scaling inside `d_l`.
    pub dl_target: Scaling,
    /// Feature scaling inside `d_i`.
    pub di_features: Scaling,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization {
            cfe_target: Scaling::MinMax,
            dl_target: Scaling::MinMax,
            di_features: Scaling::ZScore,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityOptions {
    pub epsilon: f64,
    pub normalization: Normalization,
}

impl Default for ComplexityOptions {
    fn default() -> Self {
        ComplexityOptions {
            epsilon: DEFAULT_EPSILON,
            normalization: Normalization::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub c_fe: f64,
    pub d_l: f64,
    pub d_i: f64,
    pub epsilon: f64,
    pub normalization: Normalization,
}

impl ComplexityReport {
    pub const CSV_HEADER: [&'static str; 5] = ["dataset", "c_fe", "d_l", "d_i", "epsilon"];

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn csv_row(&self, dataset: &str) -> [String; 5] {
        [
            dataset.to_string(),
            self.c_fe.to_string(),
            self.d_l.to_string(),
            self.d_i.to_string(),
            self.epsilon.to_string(),
        ]
    }
}

fn scale_column(v: ArrayView1<'_, f64>, scaling: Scaling) -> Array1<f64> {
    match scaling {
        Scaling::Raw => v.to_owned(),
        Scaling::MinMax => {
            let lo = v.fold(f64::INFINITY, |a, &b| a.min(b));
            let hi = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let range = hi - lo;
            if range > 0.0 {
                v.mapv(|x| (x - lo) / range)
            } else {
                Array1::zeros(v.len())
            }
        }
        Scaling::ZScore => {
            let n = v.len() as f64;
            let mean = v.sum() / n;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                v.mapv(|x| (x - mean) / sd)
            } else {
                Array1::zeros(v.len())
            }
        }
    }
}

fn scale_features(x: ArrayView2<'_, f64>, scaling: Scaling) -> Array2<f64> {
    match scaling {
        Scaling::ZScore => {
            let (mean, sd) = column_moments(x);
            let mut out = x.to_owned();
            for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
                if sd[j] > 0.0 {
                    col.mapv_inplace(|v| (v - mean[j]) / sd[j]);
                } else {
                    col.fill(0.0);
                }
            }
            out
        }
        _ => {
            let mut out = x.to_owned();
            for mut col in out.axis_iter_mut(Axis(1)) {
                let scaled = scale_column(col.view(), scaling);
                col.assign(&scaled);
            }
            out
        }
    }
}

/// Least-squares coefficients, intercept first. Rank-deficient systems get
/// the minimum-norm solution (SVD).
pub fn ols_fit(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n < d + 1 {
        return Err(Error::param(format!(
            "least squares needs at least {} rows for {d} features, got {n}",
            d + 1
        )));
    }
    lstsq(x, y)
}

fn lstsq(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
    let (n, d) = x.dim();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[[i, j - 1]] });
    let rhs = DVector::from_iterator(n, y.iter().copied());
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * (n.max(d + 1) as f64) * f64::EPSILON;
    let beta = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(beta.iter().copied().collect())
}

fn residuals(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, coef: &[f64]) -> Vec<f64> {
    x.axis_iter(Axis(0))
        .zip(y.iter())
        .map(|(row, yi)| {
            let fit = coef[0] + row.iter().zip(&coef[1..]).map(|(a, b)| a * b).sum::<f64>();
            yi - fit
        })
        .collect()
}

/// |Pearson| of two equal-length slices; 0 when either side is constant.
fn abs_corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if a.len() < 2 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).abs().min(1.0)
}

/// Feature efficiency with the default (min-max) target scaling.
pub fn c_fe(ds: &Dataset, epsilon: f64) -> Result<f64> {
    c_fe_with(ds, epsilon, Normalization::default().cfe_target)
}

/// Feature efficiency: the share of instances that no single-feature linear
/// fit explains to within `epsilon`.
///
/// Features are visited greedily by |Pearson| with the target on the rows
/// still remaining (ties go to the lower column index). Each visit fits a
/// line on that feature and drops rows whose residual is at most `epsilon`.
pub fn c_fe_with(ds: &Dataset, epsilon: f64, target: Scaling) -> Result<f64> {
    let (n, d) = (ds.n_rows(), ds.n_features());
    if n < 3 {
        return Err(Error::Empty(format!("feature efficiency needs 3 rows, got {n}")));
    }
    if epsilon.is_nan() || epsilon < 0.0 || epsilon.is_infinite() {
        return Err(Error::param(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    let x = ds.features();
    if x.axis_iter(Axis(1)).all(|c| c.iter().all(|v| *v == c[0])) {
        return Err(Error::Degenerate("all features are constant".into()));
    }
    let y = scale_column(ds.targets(), target);

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut visited = vec![false; d];
    let mut removed = 0usize;
    for _ in 0..d {
        if remaining.is_empty() {
            break;
        }
        let yr: Vec<f64> = remaining.iter().map(|&i| y[i]).collect();
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|j| !visited[*j]) {
            let xr: Vec<f64> = remaining.iter().map(|&i| x[[i, j]]).collect();
            let r = abs_corr(&xr, &yr);
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((j, r));
            }
        }
        let (j, _) = best.expect("an unvisited feature exists");
        visited[j] = true;

        let xr = Array2::from_shape_fn((remaining.len(), 1), |(i, _)| x[[remaining[i], j]]);
        let yv = Array1::from(yr);
        let coef = lstsq(xr.view(), yv.view())?;
        let res = residuals(xr.view(), yv.view(), &coef);
        let before = remaining.len();
        remaining = remaining
            .into_iter()
            .zip(res)
            .filter(|(_, r)| r.abs() > epsilon)
            .map(|(i, _)| i)
            .collect();
        removed += before - remaining.len();
    }
    Ok(1.0 - removed as f64 / n as f64)
}

/// Linearity with the default (min-max) target scaling.
pub fn d_l(ds: &Dataset) -> Result<f64> {
    d_l_with(ds, Normalization::default().dl_target)
}

/// `1 - mean |residual|` of a multiple linear fit on all features.
pub fn d_l_with(ds: &Dataset, target: Scaling) -> Result<f64> {
    let y = scale_column(ds.targets(), target);
    let coef = ols_fit(ds.features(), y.view())?;
    let res = residuals(ds.features(), y.view(), &coef);
    Ok(1.0 - res.iter().map(|r| r.abs()).sum::<f64>() / res.len() as f64)
}

/// Input smoothness with z-scored features.
pub fn d_i(ds: &Dataset) -> Result<f64> {
    d_i_with(ds, Normalization::default().di_features)
}

/// Mean Euclidean distance between consecutive rows once sorted by target.
/// Equal targets keep their original row order.
pub fn d_i_with(ds: &Dataset, features: Scaling) -> Result<f64> {
    let n = ds.n_rows();
    if n <= 1 {
        return Ok(0.0);
    }
    let x = scale_features(ds.features(), features);
    let y = ds.targets();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let total: f64 = order
        .windows(2)
        .map(|w| {
            let (a, b) = (x.row(w[0]), x.row(w[1]));
            a.iter()
                .zip(b.iter())
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / n as f64)
}

pub fn complexity_report(ds: &Dataset, options: &ComplexityOptions) -> Result<ComplexityReport> {
    let norm = options.normalization;
    Ok(ComplexityReport {
        c_fe: c_fe_with(ds, options.epsilon, norm.cfe_target)?,
        d_l: d_l_with(ds, norm.dl_target)?,
        d_i: d_i_with(ds, norm.di_features)?,
        epsilon: options.epsilon,
        normalization: norm,
    })
}
