use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stboost_core::{
    beta_schedule, cv_step_error, fit_adaboost_r2, fit_strada, fit_strada_traced, fit_ttr2, fit_ttr2_traced,
    kfold, predict_weighted_median, rmse, AdaBoostR2, Dataset, LossKind, StradaConfig, TrainingPool,
    TreeConfig, WeightTrace,
};

fn linear_task(rng: &mut ChaCha8Rng, n: usize, noise: f64) -> Dataset {
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..10.0)]).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|r| 2.0 * r[0] + noise * (rng.random::<f64>() - 0.5) * 2.0)
        .collect();
    Dataset::from_rows(&x, &y).unwrap()
}

fn small_config(seed: u64) -> StradaConfig {
    StradaConfig {
        steps: 6,
        estimators: 8,
        folds: 3,
        seed,
        ..Default::default()
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[test]
fn strada_without_source_is_plain_boosting() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let target = linear_task(&mut rng, 30, 1.0);
    let pool = TrainingPool::target_only(&target);
    let cfg = small_config(1);
    let model = fit_strada(&pool, &cfg).unwrap();

    let mut w = uniform(30);
    for step in &model.steps {
        let plain = fit_adaboost_r2(
            pool.x.view(),
            pool.y.view(),
            &w,
            cfg.estimators,
            cfg.loss,
            cfg.tree,
            0,
        )
        .unwrap();
        assert_eq!(plain, step.ensemble);
        w = step.weights_after.clone();
    }
    let (lo, hi) = target
        .targets()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    for p in model.predict_matrix(target.features()).unwrap() {
        assert!(p >= lo && p <= hi);
    }
}

#[test]
fn ttr2_without_source_repeats_one_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let target = linear_task(&mut rng, 30, 1.0);
    let pool = TrainingPool::target_only(&target);
    let cfg = small_config(2);
    let model = fit_ttr2(&pool, &cfg).unwrap();
    let plain = fit_adaboost_r2(
        pool.x.view(),
        pool.y.view(),
        &uniform(30),
        cfg.estimators,
        cfg.loss,
        cfg.tree,
        0,
    )
    .unwrap();
    for step in &model.steps {
        assert_eq!(step.ensemble, plain);
        assert_eq!(step.cv_error, model.steps[0].cv_error);
    }
    assert_eq!(model.best_step, 0);
}

#[test]
fn strada_beats_target_only_on_shared_distribution() {
    let cfg = StradaConfig::default();
    let mut wins = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let source = linear_task(&mut rng, 200, 2.0);
        let target = linear_task(&mut rng, 20, 2.0);
        let test = linear_task(&mut rng, 200, 2.0);
        let pool = TrainingPool::concat(&source, &target).unwrap();
        let model = fit_strada(&pool, &StradaConfig { seed, ..cfg }).unwrap();
        let transfer = rmse(
            &model.predict_matrix(test.features()).unwrap(),
            test.targets().as_slice().unwrap(),
        )
        .unwrap();
        let alone = fit_adaboost_r2(
            target.features(),
            target.targets(),
            &uniform(20),
            cfg.estimators,
            cfg.loss,
            cfg.tree,
            seed,
        )
        .unwrap();
        let baseline = rmse(
            &alone.predict_matrix(test.features()).unwrap(),
            test.targets().as_slice().unwrap(),
        )
        .unwrap();
        if transfer <= baseline {
            wins += 1;
        }
    }
    assert!(wins >= 15, "strada won only {wins} of 20 seeds");
}

fn random_pool(rng: &mut ChaCha8Rng) -> TrainingPool {
    let p = rng.random_range(0..40);
    let q = rng.random_range(6..25);
    let d = rng.random_range(1..4);
    let shift: f64 = rng.random_range(-2.0..2.0);
    let mk = |rng: &mut ChaCha8Rng, n: usize, s: f64| {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r.iter().sum::<f64>() * (1.0 + s) + rng.random_range(-1.0..1.0))
            .collect();
        Dataset::from_rows(&x, &y).unwrap()
    };
    let source = mk(rng, p.max(1), shift);
    let target = mk(rng, q, 0.0);
    if p == 0 {
        TrainingPool::target_only(&target)
    } else {
        TrainingPool::concat(&source, &target).unwrap()
    }
}

#[test]
fn every_weight_vector_is_a_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for fit in 0..100u64 {
        let pool = random_pool(&mut rng);
        let cfg = StradaConfig {
            steps: 4,
            estimators: 4,
            folds: 3,
            seed: fit,
            ..Default::default()
        };
        let mut trace = WeightTrace::default();
        if fit % 2 == 0 {
            fit_strada_traced(&pool, &cfg, Some(&mut trace)).unwrap();
        } else {
            fit_ttr2_traced(&pool, &cfg, Some(&mut trace)).unwrap();
        }
        assert!(!trace.events.is_empty());
        for (step, round, w) in &trace.events {
            let total: f64 = w.iter().sum();
            assert!(
                (total - 1.0).abs() <= 1e-9,
                "fit {fit} step {step} round {round:?}: sum {total}"
            );
            assert!(w.iter().all(|v| *v >= 0.0));
        }
    }
}

#[test]
fn ttr2_source_weights_frozen_inside_each_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let source = linear_task(&mut rng, 40, 6.0);
    let target = linear_task(&mut rng, 15, 1.0);
    let pool = TrainingPool::concat(&source, &target).unwrap();
    let p = pool.p;
    let mut trace = WeightTrace::default();
    let cfg = small_config(5);
    fit_ttr2_traced(&pool, &cfg, Some(&mut trace)).unwrap();

    let mut start = uniform(pool.len());
    for t in 0..cfg.steps {
        let rounds: Vec<&Vec<f64>> = trace
            .events
            .iter()
            .filter(|(s, r, _)| *s == t && r.is_some())
            .map(|(_, _, w)| w)
            .collect();
        for w in rounds {
            for i in 0..p {
                assert_eq!(w[i].to_bits(), start[i].to_bits(), "step {t} row {i}");
            }
        }
        start = trace
            .events
            .iter()
            .find(|(s, r, _)| *s == t && r.is_none())
            .map(|(_, _, w)| w.clone())
            .unwrap();
    }
}

#[test]
fn ttr2_target_mass_follows_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let source = linear_task(&mut rng, 60, 3.0);
    let target = linear_task(&mut rng, 20, 1.0);
    let pool = TrainingPool::concat(&source, &target).unwrap();
    let cfg = small_config(6);
    let model = fit_ttr2(&pool, &cfg).unwrap();
    for (t, step) in model.steps.iter().enumerate().take(cfg.steps - 1) {
        let mass: f64 = step.weights_after[pool.p..].iter().sum();
        let want = beta_schedule(t + 1, cfg.steps, pool.p, pool.q).unwrap();
        eprintln!("step {t}: mass {mass} want {want} factor {}", step.beta_bar);
        assert!((mass - want).abs() < 1e-9, "step {t}: {mass} vs {want}");
    }
}

#[test]
fn fits_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pool = random_pool(&mut rng);
    let cfg = small_config(11);
    let a = fit_strada(&pool, &cfg).unwrap();
    let b = fit_strada(&pool, &cfg).unwrap();
    assert_eq!(a.summary(), b.summary());
    for (x, y) in a.steps.iter().zip(&b.steps) {
        assert_eq!(x.ensemble, y.ensemble);
        assert_eq!(x.cv_error.to_bits(), y.cv_error.to_bits());
    }
    let c = fit_ttr2(&pool, &cfg).unwrap();
    let d = fit_ttr2(&pool, &cfg).unwrap();
    assert_eq!(c.summary(), d.summary());
}

#[test]
fn prediction_delegates_to_best_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let source = linear_task(&mut rng, 30, 2.0);
    let target = linear_task(&mut rng, 15, 1.0);
    let pool = TrainingPool::concat(&source, &target).unwrap();
    let mut model = fit_strada(&pool, &small_config(13)).unwrap();
    let best = model.best_step;
    let min = model
        .steps
        .iter()
        .map(|s| s.cv_error)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(model.steps[best].cv_error, min);
    assert!(model.steps[..best].iter().all(|s| s.cv_error > min));

    let probe = Array1::from(vec![4.2]);
    let direct = predict_weighted_median(&model.steps[best].ensemble, probe.view()).unwrap();
    assert_eq!(model.predict(probe.view()).unwrap(), direct);

    // Replacing every other step's ensemble leaves predictions alone.
    let replacement = model.steps[best].ensemble.clone();
    let before = model.predict_matrix(target.features()).unwrap();
    let junk = fit_adaboost_r2(
        Array2::from_elem((2, 1), 0.0).view(),
        Array1::from(vec![-100.0, -100.0]).view(),
        &uniform(2),
        1,
        LossKind::Linear,
        TreeConfig::default(),
        0,
    )
    .unwrap();
    for (i, s) in model.steps.iter_mut().enumerate() {
        if i != best {
            s.ensemble = junk.clone();
        }
    }
    assert_eq!(model.predict_matrix(target.features()).unwrap(), before);
    assert_eq!(model.steps[best].ensemble, replacement);
}

#[test]
fn cv_of_constant_learner_matches_hand_computation() {
    let target = Dataset::from_rows(
        &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        &[1.0, 2.0, 4.0, 7.0],
    )
    .unwrap();
    let pool = TrainingPool::target_only(&target);
    let folds = kfold(4, 2, 5).unwrap();
    let stump = AdaBoostR2::new(
        1,
        LossKind::Linear,
        TreeConfig {
            max_depth: 0,
            min_samples_leaf: 1,
        },
    );
    let got = cv_step_error(&pool, &uniform(4), &stump, &folds).unwrap();
    let y = [1.0, 2.0, 4.0, 7.0];
    let mut expected = 0.0;
    for f in 0..2 {
        let train = folds.train_indices(f);
        let test = folds.test_indices(f);
        let c = train.iter().map(|&i| y[i]).sum::<f64>() / train.len() as f64;
        let mse = test.iter().map(|&i| (y[i] - c).powi(2)).sum::<f64>() / test.len() as f64;
        expected += mse.sqrt() / 2.0;
    }
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn too_few_target_rows_for_folds() {
    let target = Dataset::from_rows(&[vec![0.0], vec![1.0]], &[0.0, 1.0]).unwrap();
    let pool = TrainingPool::target_only(&target);
    assert!(fit_strada(&pool, &StradaConfig::default()).is_err());
    assert!(fit_ttr2(&pool, &StradaConfig::default()).is_err());
}

#[test]
fn defaults_are_echoed() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let target = linear_task(&mut rng, 20, 1.0);
    let cfg = StradaConfig {
        steps: 2,
        ..Default::default()
    };
    let model = fit_strada(&TrainingPool::target_only(&target), &cfg).unwrap();
    assert_eq!(model.config, cfg);
    assert_eq!(
        (cfg.folds, cfg.alpha, cfg.loss, cfg.estimators),
        (10, 0.1, LossKind::Square, 50)
    );
}
