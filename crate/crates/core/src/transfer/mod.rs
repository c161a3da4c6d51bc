//! Boosting-based instance transfer: S-TrAdaBoost.R2 and the two-stage
//! TrAdaBoost.R2 baseline.
//!
//! Both fit over a [`TrainingPool`] whose first `p` rows are source rows
//! and whose last `q` rows are target rows. Each step fits an AdaBoost.R2
//! ensemble under the current instance weights, scores it by cross
//! validation over target-only folds, and then reweights the pool. The final
//! model is the step with the lowest cross-validated RMSE.

mod strada;
mod ttr2;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{normalized_losses, AdaBoostR2, BoostedEnsemble, LossKind};
use crate::dataset::FoldAssignment;
use crate::error::{Error, Result};
use crate::metrics::rmse;
use crate::sampling::TrainingPool;
use crate::tree::TreeConfig;

pub use strada::{fit_strada, fit_strada_traced};
pub use ttr2::{fit_ttr2, fit_ttr2_traced, stage_one_reweight};

/// How the learning rate enters the S-TrAdaBoost.R2 weight update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Scales the exponent: `beta^(alpha * e)`.
    #[default]
    Exponent,
    /// Multiplies every weight by `alpha` before normalisation, which makes
    /// the learning rate a no-op.
    Multiplier,
}

impl std::str::FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponent" => Ok(AlphaMode::Exponent),
            "multiplier" => Ok(AlphaMode::Multiplier),
            other => Err(Error::param(format!("unknown alpha mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StradaConfig {
    /// Transfer steps (S).
    pub steps: usize,
    /// AdaBoost.R2 estimators per step (N).
    pub estimators: usize,
    /// Target-only cross-validation folds (F).
    pub folds: usize,
    /// Learning rate (alpha).
    pub alpha: f64,
    pub loss: LossKind,
    pub tree: TreeConfig,
    pub seed: u64,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
}

impl Default for StradaConfig {
    fn default() -> Self {
        StradaConfig {
            steps: 30,
            estimators: 50,
            folds: 10,
            alpha: 0.1,
            loss: LossKind::Square,
            tree: TreeConfig::default(),
            seed: 0,
            alpha_mode: AlphaMode::Exponent,
        }
    }
}

impl StradaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::param("steps must be at least 1"));
        }
        if self.estimators == 0 {
            return Err(Error::param("estimators must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::param("folds must be at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha must lie in (0, 1]"));
        }
        self.tree.validate()
    }

    pub(crate) fn booster(&self) -> AdaBoostR2 {
        AdaBoostR2::new(self.estimators, self.loss, self.tree)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferAlgorithm {
    Strada,
    Ttr2,
}

/// One transfer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub ensemble: BoostedEnsemble,
    /// Weighted adjusted error of the step's hypothesis.
    pub eta: f64,
    /// Source decay factor. For S-TrAdaBoost.R2 this is `eta / (1 - eta)`;
    /// for TTR2 it is the factor found by the stage-one search.
    pub beta_bar: f64,
    /// Target factor. For TTR2 this is the scheduled target mass.
    pub beta: f64,
    /// Mean RMSE over the held-out target folds.
    pub cv_error: f64,
    pub weights_after: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolShape {
    pub p: usize,
    pub q: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferModel {
    pub algorithm: TransferAlgorithm,
    pub steps: Vec<StepRecord>,
    pub best_step: usize,
    pub pool: PoolShape,
    pub config: StradaConfig,
}

impl TransferModel {
    pub fn best(&self) -> &BoostedEnsemble {
        &self.steps[self.best_step].ensemble
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        self.best().predict(x)
    }

    pub fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.best().predict_matrix(x)
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            algorithm: self.algorithm,
            best_step: self.best_step,
            pool: self.pool,
            config: self.config,
            steps: self
                .steps
                .iter()
                .map(|s| StepSummary {
                    eta: s.eta,
                    beta_bar: s.beta_bar,
                    beta: s.beta,
                    cv_error: s.cv_error,
                })
                .collect(),
        }
    }
}

/// Weighted-median prediction of the selected step.
pub fn predict(model: &TransferModel, x: ArrayView1<'_, f64>) -> Result<f64> {
    model.predict(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub eta: f64,
    pub beta_bar: f64,
    pub beta: f64,
    pub cv_error: f64,
}

/// JSON-ready digest of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub algorithm: TransferAlgorithm,
    pub best_step: usize,
    pub pool: PoolShape,
    pub config: StradaConfig,
    pub steps: Vec<StepSummary>,
}

/// Weight vectors observed during a fit, for invariant checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightTrace {
    /// `(step, round, weights)`; `round` is `None` for the step-level vector
    /// and `Some(r)` for boosting round `r` inside the step's main fit.
    pub events: Vec<(usize, Option<usize>, Vec<f64>)>,
}

/// `|y - y_hat|` scaled by its maximum and passed through the loss law.
pub fn adjusted_error(predictions: &[f64], y: &[f64], loss: LossKind) -> Result<Vec<f64>> {
    if predictions.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: predictions.len(),
        });
    }
    let residuals: Vec<f64> = predictions.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
    Ok(normalized_losses(&residuals, loss))
}

/// Target factor at step `t` (0-based): a straight line from `q / (p + q)`
/// at `t = 0` to exactly 1 at `t = steps - 1`.
pub fn beta_schedule(t: usize, steps: usize, p: usize, q: usize) -> Result<f64> {
    if steps == 0 || t >= steps {
        return Err(Error::param(format!("step {t} outside 0..{steps}")));
    }
    if p + q == 0 {
        return Err(Error::Empty("pool is empty".into()));
    }
    if steps == 1 || t == steps - 1 {
        return Ok(1.0);
    }
    let start = q as f64 / (p + q) as f64;
    Ok(start + t as f64 / (steps - 1) as f64 * (1.0 - start))
}

/// S-TrAdaBoost.R2 reweighting: source rows (`0..p`) are multiplied by
/// `beta_bar^(alpha e)`, target rows by `beta^(alpha (1 - e))`, and the
/// result is normalised to sum to one.
#[allow(clippy::too_many_arguments)]
pub fn update_weights(
    w: &[f64],
    e: &[f64],
    beta_bar: f64,
    beta: f64,
    alpha: f64,
    p: usize,
    q: usize,
    mode: AlphaMode,
) -> Result<Vec<f64>> {
    let n = p + q;
    if w.len() != n || e.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if w.len() != n { w.len() } else { e.len() },
        });
    }
    if beta_bar.is_nan() || beta_bar < 0.0 || beta_bar.is_infinite() {
        return Err(Error::param(format!(
            "beta_bar = {beta_bar} must be finite and >= 0"
        )));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!("beta = {beta} must lie in (0, 1]")));
    }
    let exponent = match mode {
        AlphaMode::Exponent => alpha,
        AlphaMode::Multiplier => 1.0,
    };
    let scale = match mode {
        AlphaMode::Exponent => 1.0,
        AlphaMode::Multiplier => alpha,
    };
    let mut u: Vec<f64> = (0..n)
        .map(|i| {
            let factor = if i < p {
                beta_bar.powf(exponent * e[i])
            } else {
                beta.powf(exponent * (1.0 - e[i]))
            };
            w[i] * factor * scale
        })
        .collect();
    let z: f64 = u.iter().sum();
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Degenerate("weight normaliser is zero".into()));
    }
    u.iter_mut().for_each(|v| *v /= z);
    Ok(u)
}

/// Renormalised restriction of `w` to `rows`; uniform if the mass is zero.
pub(crate) fn restrict(w: &[f64], rows: &[usize]) -> Vec<f64> {
    let mut out: Vec<f64> = rows.iter().map(|&i| w[i]).collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    } else {
        let u = 1.0 / out.len() as f64;
        out.iter_mut().for_each(|v| *v = u);
    }
    out
}

/// Mean target-fold RMSE for one step. Each fold trains on every source row
/// plus the other target folds, with `weights` restricted and renormalised.
pub fn cv_step_error(
    pool: &TrainingPool,
    weights: &[f64],
    booster: &AdaBoostR2,
    folds: &FoldAssignment,
) -> Result<f64> {
    if folds.fold_of.len() != pool.q {
        return Err(Error::DimensionMismatch {
            expected: pool.q,
            actual: folds.fold_of.len(),
        });
    }
    if pool.q < folds.folds {
        return Err(Error::param(format!(
            "{} target rows cannot fill {} folds",
            pool.q, folds.folds
        )));
    }
    let per_fold: Vec<Result<f64>> = (0..folds.folds)
        .into_par_iter()
        .map(|f| {
            let mut train: Vec<usize> = (0..pool.p).collect();
            train.extend(folds.train_indices(f).into_iter().map(|j| pool.p + j));
            let test: Vec<usize> = folds.test_indices(f).into_iter().map(|j| pool.p + j).collect();
            let w = restrict(weights, &train);
            let x = pool.x.select(Axis(0), &train);
            let y = pool.y.select(Axis(0), &train);
            let ens = booster.fit(x.view(), y.view(), &w)?;
            let xt = pool.x.select(Axis(0), &test);
            let pred = ens.predict_matrix(xt.view())?;
            let actual: Vec<f64> = test.iter().map(|&i| pool.y[i]).collect();
            rmse(&pred, &actual)
        })
        .collect();
    let mut total = 0.0;
    for r in per_fold {
        total += r?;
    }
    Ok(total / folds.folds as f64)
}

/// Index of the smallest cv error; the earliest wins ties.
pub(crate) fn select_best(steps: &[StepRecord]) -> usize {
    let mut best = 0;
    for (i, s) in steps.iter().enumerate() {
        if s.cv_error < steps[best].cv_error {
            best = i;
        }
    }
    best
}

pub(crate) fn check_pool(pool: &TrainingPool, config: &StradaConfig) -> Result<()> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::Empty("training pool".into()));
    }
    if pool.x.nrows() != pool.len() || pool.y.len() != pool.len() {
        return Err(Error::DimensionMismatch {
            expected: pool.len(),
            actual: pool.x.nrows(),
        });
    }
    if pool.q < config.folds {
        return Err(Error::param(format!(
            "{} target rows cannot fill {} folds",
            pool.q, config.folds
        )));
    }
    Ok(())
}
