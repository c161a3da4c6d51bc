use super::{
    adjusted_error, beta_schedule, check_pool, cv_step_error, select_best, update_weights, PoolShape,
    StepRecord, StradaConfig, TransferAlgorithm, TransferModel, WeightTrace,
};
use crate::dataset::kfold;
use crate::error::Result;
use crate::sampling::TrainingPool;

/// Fits S-TrAdaBoost.R2 on an already sampled pool.
///
/// Step `t` boosts on the whole pool under the current weights, scores the
/// result on target-only folds, and then moves weight away from badly fit
/// source rows (factor `beta_bar^(alpha e)`) and onto badly fit target rows
/// (factor `beta_t^(alpha (1 - e))`). Stepping stops early once the weighted
/// adjusted error reaches one half.
pub fn fit_strada(pool: &TrainingPool, config: &StradaConfig) -> Result<TransferModel> {
    fit_strada_traced(pool, config, None)
}

pub fn fit_strada_traced(
    pool: &TrainingPool,
    config: &StradaConfig,
    mut trace: Option<&mut WeightTrace>,
) -> Result<TransferModel> {
    check_pool(pool, config)?;
    let n = pool.len();
    let (p, q) = (pool.p, pool.q);
    let folds = kfold(q, config.folds, config.seed)?;
    let booster = config.booster();
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
        let predictions = ensemble.predict_matrix(pool.x.view())?;
        let e = adjusted_error(&predictions, y, config.loss)?;
        let eta: f64 = w.iter().zip(&e).map(|(a, b)| a * b).sum();
        let cv_error = cv_step_error(pool, &w, &booster, &folds)?;
        let beta = beta_schedule(t, config.steps, p, q)?;

        if eta >= 0.5 {
            let beta_bar = if eta < 1.0 { eta / (1.0 - eta) } else { f64::MAX };
            if let Some(tr) = trace.as_deref_mut() {
                tr.events.push((t, None, w.clone()));
            }
            steps.push(StepRecord {
                ensemble,
                eta,
                beta_bar,
                beta,
                cv_error,
                weights_after: w.clone(),
            });
            break;
        }

        let beta_bar = eta / (1.0 - eta);
        w = update_weights(&w, &e, beta_bar, beta, config.alpha, p, q, config.alpha_mode)?;
        if let Some(tr) = trace.as_deref_mut() {
            tr.events.push((t, None, w.clone()));
        }
        steps.push(StepRecord {
            ensemble,
            eta,
            beta_bar,
            beta,
            cv_error,
            weights_after: w.clone(),
        });
    }

    let best_step = select_best(&steps);
    Ok(TransferModel {
        algorithm: TransferAlgorithm::Strada,
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
