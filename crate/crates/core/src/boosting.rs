//! AdaBoost.R2 (Drucker, 1997) for regression with weighted trees and a
//! weighted-median combiner.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{check_simplex, grow, RegressionTree, TreeConfig};

/// Loss law mapping a residual, relative to the largest residual, into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Linear,
    #[default]
    Square,
    Exponential,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(LossKind::Linear),
            "square" | "squared" => Ok(LossKind::Square),
            "exponential" => Ok(LossKind::Exponential),
            other => Err(Error::param(format!("unknown loss `{other}`"))),
        }
    }
}

/// `r / D`, `(r / D)^2` or `1 - exp(-r / D)` with `D = max r`; all zeros when `D = 0`.
pub fn normalized_losses(residuals: &[f64], loss: LossKind) -> Vec<f64> {
    let max = residuals.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0.0; residuals.len()];
    }
    residuals
        .iter()
        .map(|&r| {
            let ratio = r / max;
            match loss {
                LossKind::Linear => ratio,
                LossKind::Square => ratio * ratio,
                LossKind::Exponential => 1.0 - (-ratio).exp(),
            }
        })
        .collect()
}

/// Log weight given to a member whose average loss is exactly zero.
pub const PERFECT_MEMBER_LOG_WEIGHT: f64 = 27.631_021_115_928_547; // ln(1e12)

/// Trees combined by weighted median.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedEnsemble {
    members: Vec<RegressionTree>,
    log_weights: Vec<f64>,
    loss: LossKind,
}

impl BoostedEnsemble {
    pub fn new(members: Vec<RegressionTree>, log_weights: Vec<f64>, loss: LossKind) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("ensemble has no members".into()));
        }
        if members.len() != log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                actual: log_weights.len(),
            });
        }
        if log_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param("member log weights must be finite and nonnegative"));
        }
        Ok(BoostedEnsemble {
            members,
            log_weights,
            loss,
        })
    }

    pub fn members(&self) -> &[RegressionTree] {
        &self.members
    }

    /// `ln(1 / beta)` per member.
    pub fn member_log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let d = self.members[0].n_features();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: ArrayView1<'_, f64>) -> f64 {
        let preds: Vec<f64> = self.members.iter().map(|m| m.predict_unchecked(x)).collect();
        weighted_median(&preds, &self.log_weights)
    }

    pub fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let d = self.members[0].n_features();
        if x.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: x.ncols(),
            });
        }
        Ok(x.rows().into_iter().map(|r| self.predict_unchecked(r)).collect())
    }
}

/// The smallest prediction whose cumulative weight reaches half the total.
pub fn weighted_median(predictions: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(predictions.len(), weights.len());
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]).then(a.cmp(&b)));
    let half = 0.5 * weights.iter().sum::<f64>();
    let mut cumulative = 0.0;
    for &i in &order {
        cumulative += weights[i];
        if cumulative >= half {
            return predictions[i];
        }
    }
    predictions[*order.last().expect("nonempty ensemble")]
}

/// Weighted-median prediction of an ensemble at one point.
pub fn predict_weighted_median(ensemble: &BoostedEnsemble, x: ArrayView1<'_, f64>) -> Result<f64> {
    ensemble.predict(x)
}

/// Settings for one AdaBoost.R2 run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaBoostR2 {
    pub estimators: usize,
    pub loss: LossKind,
    pub tree: TreeConfig,
    /// Rows `0..frozen` keep their weight across rounds; only the remaining
    /// rows are reweighted, with their total mass held fixed. Zero gives
    /// plain AdaBoost.R2.
    pub frozen: usize,
}

/// Per-round bookkeeping, recorded on request.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoostTrace {
    /// Working weights after each admitted round's update.
    pub weights: Vec<Vec<f64>>,
    /// Weighted average loss of every fitted member, admitted or not.
    pub average_losses: Vec<f64>,
}

impl AdaBoostR2 {
    pub fn new(estimators: usize, loss: LossKind, tree: TreeConfig) -> Self {
        AdaBoostR2 {
            estimators,
            loss,
            tree,
            frozen: 0,
        }
    }

    pub fn with_frozen_prefix(mut self, frozen: usize) -> Self {
        self.frozen = frozen;
        self
    }

    pub fn fit(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        w_init: &[f64],
    ) -> Result<BoostedEnsemble> {
        self.fit_inner(x, y, w_init, None)
    }

    pub fn fit_traced(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        w_init: &[f64],
    ) -> Result<(BoostedEnsemble, BoostTrace)> {
        let mut trace = BoostTrace::default();
        let ens = self.fit_inner(x, y, w_init, Some(&mut trace))?;
        Ok((ens, trace))
    }

    fn fit_inner(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        w_init: &[f64],
        mut trace: Option<&mut BoostTrace>,
    ) -> Result<BoostedEnsemble> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::Empty("cannot boost on zero rows".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: y.len(),
            });
        }
        if self.estimators == 0 {
            return Err(Error::param("estimator count must be at least 1"));
        }
        if self.frozen > n {
            return Err(Error::param("frozen prefix longer than the data"));
        }
        self.tree.validate()?;
        check_simplex(w_init, n)?;

        let mut w = w_init.to_vec();
        let mut members = Vec::new();
        let mut log_weights = Vec::new();
        let mut residuals = vec![0.0; n];

        for _ in 0..self.estimators {
            let tree = grow(x, y, &w, self.tree);
            for (i, row) in x.rows().into_iter().enumerate() {
                residuals[i] = (y[i] - tree.predict_unchecked(row)).abs();
            }
            let losses = normalized_losses(&residuals, self.loss);
            let avg: f64 = w.iter().zip(&losses).map(|(a, b)| a * b).sum();
            if let Some(t) = trace.as_deref_mut() {
                t.average_losses.push(avg);
            }

            if avg >= 0.5 {
                if members.is_empty() {
                    // A lone member still has to predict something.
                    members.push(tree);
                    log_weights.push(1.0);
                }
                break;
            }
            if avg <= 0.0 {
                members.push(tree);
                log_weights.push(PERFECT_MEMBER_LOG_WEIGHT);
                if let Some(t) = trace.as_deref_mut() {
                    t.weights.push(w.clone());
                }
                break;
            }

            let beta = avg / (1.0 - avg);
            members.push(tree);
            log_weights.push((1.0 / beta).ln().min(PERFECT_MEMBER_LOG_WEIGHT));
            self.reweight(&mut w, &losses, beta);
            if let Some(t) = trace.as_deref_mut() {
                t.weights.push(w.clone());
            }
        }
        BoostedEnsemble::new(members, log_weights, self.loss)
    }

    /// `w_i <- w_i * beta^(1 - L_i)` on the free rows, then rescale them to
    /// their previous total (or to 1 when nothing is frozen).
    fn reweight(&self, w: &mut [f64], losses: &[f64], beta: f64) {
        let free = &mut w[self.frozen..];
        let before: f64 = if self.frozen == 0 { 1.0 } else { free.iter().sum() };
        if before <= 0.0 {
            return;
        }
        for (wi, li) in free.iter_mut().zip(&losses[self.frozen..]) {
            *wi *= beta.powf(1.0 - li);
        }
        let after: f64 = free.iter().sum();
        if after > 0.0 {
            let scale = before / after;
            free.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

/// Plain AdaBoost.R2. `seed` is accepted for interface symmetry; fitting is
/// deterministic (weighted trees, no resampling).
pub fn fit_adaboost_r2(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    w_init: &[f64],
    estimators: usize,
    loss: LossKind,
    tree: TreeConfig,
    _seed: u64,
) -> Result<BoostedEnsemble> {
    AdaBoostR2::new(estimators, loss, tree).fit(x, y, w_init)
}
