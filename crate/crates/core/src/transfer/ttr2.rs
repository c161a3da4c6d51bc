//! Two-stage TrAdaBoost.R2 (Pardoe & Stone, 2010).
//!
//! Stage one walks the total target mass up a linear schedule by decaying
//! source weights by `factor^e_i`, with the factor found by bisection. At
//! every step, stage two runs AdaBoost.R2 with the source weights frozen;
//! that ensemble is the step's candidate model.

use super::{
    adjusted_error, beta_schedule, check_pool, cv_step_error, select_best, PoolShape, StepRecord,
    StradaConfig, TransferAlgorithm, TransferModel, WeightTrace,
};
use crate::dataset::{kfold, FoldAssignment};
use crate::error::{Error, Result};
use crate::sampling::TrainingPool;
use crate::tree::grow;

const BISECTION_ROUNDS: usize = 200;

/// Rescales the source rows (`0..p`) by `factor^e_i` so that, after
/// normalisation, the target rows hold `target_mass` of the total. Returns
/// the new weights and the factor. The decayed source rows are finally
/// rescaled uniformly so the target mass is met exactly; this matters when
/// even `factor = 0` leaves too much source mass (rows with zero error).
pub fn stage_one_reweight(w: &[f64], e: &[f64], p: usize, target_mass: f64) -> Result<(Vec<f64>, f64)> {
    if w.len() != e.len() || p > w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            actual: e.len(),
        });
    }
    if !(target_mass > 0.0 && target_mass <= 1.0) {
        return Err(Error::param(format!("target mass {target_mass} outside (0, 1]")));
    }
    if p == 0 {
        return Ok((w.to_vec(), 1.0));
    }
    let target_total: f64 = w[p..].iter().sum();
    if target_total <= 0.0 {
        let total: f64 = w.iter().sum();
        return Ok((w.iter().map(|v| v / total).collect(), 1.0));
    }
    let wanted_source = target_total * (1.0 - target_mass) / target_mass;
    let source_at = |factor: f64| -> f64 {
        w[..p]
            .iter()
            .zip(&e[..p])
            .map(|(wi, ei)| wi * factor.powf(*ei))
            .sum()
    };

    let mut out = w.to_vec();
    if source_at(1.0) <= wanted_source {
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= total);
        return Ok((out, 1.0));
    }
    let factor = if source_at(0.0) >= wanted_source {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..BISECTION_ROUNDS {
            let mid = 0.5 * (lo + hi);
            if source_at(mid) > wanted_source {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    for (wi, ei) in out[..p].iter_mut().zip(&e[..p]) {
        *wi *= factor.powf(*ei);
    }
    // Bisection leaves a small gap, and near-zero errors make the source
    // mass jump as the factor reaches 0; a uniform rescale closes it.
    let decayed: f64 = out[..p].iter().sum();
    if decayed > 0.0 {
        let scale = wanted_source / decayed;
        out[..p].iter_mut().for_each(|v| *v *= scale);
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok((out, factor))
}

/// Fits two-stage TrAdaBoost.R2. Expects an unsampled pool (all source rows).
pub fn fit_ttr2(pool: &TrainingPool, config: &StradaConfig) -> Result<TransferModel> {
    fit_ttr2_traced(pool, config, None)
}

pub fn fit_ttr2_traced(
    pool: &TrainingPool,
    config: &StradaConfig,
    mut trace: Option<&mut WeightTrace>,
) -> Result<TransferModel> {
    check_pool(pool, config)?;
    let n = pool.len();
    let (p, q) = (pool.p, pool.q);
    let folds = kfold(q, config.folds, config.seed)?;
    let booster = config.booster().with_frozen_prefix(p);
    let y = pool.y.as_slice().expect("contiguous targets");

    let mut w = vec![1.0 / n as f64; n];
    let mut steps = Vec::with_capacity(config.steps);
    for t in 0..config.steps {
        let (ensemble, boost_trace) = booster.fit_traced(pool.x.view(), pool.y.view(), &w)?;
        if let Some(tr) = trace.as_deref_mut() {
            for (r, wr) in boost_trace.weights.into_iter().enumerate() {
                tr.events.push((t, Some(r), wr));
            }
        }
        let cv_error = cv_ttr2(pool, &w, config, &folds)?;

        // Stage-one learner: a single tree under the step weights.
        let tree = grow(pool.x.view(), pool.y.view(), &w, config.tree);
        let predictions = tree.predict_matrix(pool.x.view())?;
        let e = adjusted_error(&predictions, y, config.loss)?;
        let eta: f64 = w.iter().zip(&e).map(|(a, b)| a * b).sum();
        let beta = beta_schedule(t, config.steps, p, q)?;

        let (next, factor) = if t + 1 < config.steps {
            stage_one_reweight(&w, &e, p, beta_schedule(t + 1, config.steps, p, q)?)?
        } else {
            (w.clone(), 1.0)
        };
        if let Some(tr) = trace.as_deref_mut() {
            tr.events.push((t, None, next.clone()));
        }
        steps.push(StepRecord {
            ensemble,
            eta,
            beta_bar: factor,
            beta,
            cv_error,
            weights_after: next.clone(),
        });
        w = next;
    }

    let best_step = select_best(&steps);
    Ok(TransferModel {
        algorithm: TransferAlgorithm::Ttr2,
        steps,
        best_step,
        pool: PoolShape {
            p,
            q,
            n_features: pool.n_features(),
        },
        config: *config,
    })
}

/// Target-fold CV with frozen source weights. Each fold's training set keeps
/// the `p` source rows in front, so the frozen prefix still covers them.
fn cv_ttr2(pool: &TrainingPool, w: &[f64], config: &StradaConfig, folds: &FoldAssignment) -> Result<f64> {
    cv_step_error(pool, w, &config.booster().with_frozen_prefix(pool.p), folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target_mass(w: &[f64], p: usize) -> f64 {
        w[p..].iter().sum()
    }

    #[test]
    fn reaches_the_scheduled_mass() {
        let w = vec![0.1; 10];
        let e = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.3, 0.1, 0.0, 0.5];
        let (out, factor) = stage_one_reweight(&w, &e, 8, 0.5).unwrap();
        assert!((target_mass(&out, 8) - 0.5).abs() < 1e-12);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(factor > 0.0 && factor < 1.0);
        // Larger errors decay more.
        assert!(out[0] > out[5]);
        assert_eq!(out[8], out[9]);
    }

    #[test]
    fn no_source_leaves_weights_alone() {
        let w = [0.25, 0.75];
        assert_eq!(
            stage_one_reweight(&w, &[1.0, 0.0], 0, 0.9).unwrap(),
            (w.to_vec(), 1.0)
        );
    }

    #[test]
    fn enough_target_mass_already() {
        let (out, factor) = stage_one_reweight(&[0.1, 0.9], &[1.0, 1.0], 1, 0.5).unwrap();
        assert_eq!(factor, 1.0);
        assert_eq!(out, [0.1, 0.9]);
    }

    #[test]
    fn zero_error_source_rows_still_meet_the_schedule() {
        // With e = 0 no factor can move the source mass; the final rescale does.
        let (out, factor) = stage_one_reweight(&[0.4, 0.4, 0.2], &[0.0, 0.0, 1.0], 2, 0.6).unwrap();
        assert_eq!(factor, 0.0);
        assert!((target_mass(&out, 2) - 0.6).abs() < 1e-12);
        assert!((out[0] - out[1]).abs() < 1e-15);
    }

    #[test]
    fn full_target_mass_drops_source() {
        let (out, _) = stage_one_reweight(&[0.5, 0.5], &[0.5, 0.0], 1, 1.0).unwrap();
        assert_eq!(out, [0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(stage_one_reweight(&[0.5, 0.5], &[0.0], 1, 0.5).is_err());
        assert!(stage_one_reweight(&[0.5, 0.5], &[0.0, 0.0], 3, 0.5).is_err());
        assert!(stage_one_reweight(&[0.5, 0.5], &[0.0, 0.0], 1, 0.0).is_err());
    }
}
