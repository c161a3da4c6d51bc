//! Summary statistics for result columns.

use serde::{Deserialize, Serialize};

/// Location and spread of one metric over iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Quantile with linear interpolation between order statistics
/// (position `q * (n - 1)`), the same rule as numpy's default.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// NaNs are ignored; an all-NaN sample summarises to NaN everywhere.
pub fn summarize(values: &[f64]) -> Summary {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Summary {
            mean: f64::NAN,
            median: f64::NAN,
            q1: f64::NAN,
            q3: f64::NAN,
            iqr: f64::NAN,
        };
    }
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let q1 = quantile(&v, 0.25);
    let q3 = quantile(&v, 0.75);
    Summary {
        mean,
        median: quantile(&v, 0.5),
        q1,
        q3,
        iqr: q3 - q1,
    }
}
