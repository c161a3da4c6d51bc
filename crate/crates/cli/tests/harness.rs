use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stboost_cli::config::{Algorithm, DatasetSpec, ExperimentConfig, SamplingParams};
use stboost_cli::{output, run_ablation, run_comparative, run_negative_transfer};
use stboost_core::StradaConfig;

fn write_toy(dir: &Path, name: &str, n: usize, seed: u64) -> DatasetSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("a,b,y\n");
    for _ in 0..n {
        let a: f64 = rng.random_range(0.0..10.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let y = 2.0 * a + b + rng.random_range(-0.5..0.5);
        text.push_str(&format!("{a},{b},{y}\n"));
    }
    let path = dir.join(format!("{name}.csv"));
    std::fs::write(&path, text).unwrap();
    DatasetSpec {
        name: name.to_string(),
        path,
        target: "y".to_string(),
        split_feature: Some("a".to_string()),
    }
}

fn small_config(datasets: Vec<DatasetSpec>) -> ExperimentConfig {
    ExperimentConfig {
        datasets,
        strada: StradaConfig {
            steps: 3,
            estimators: 5,
            folds: 2,
            ..Default::default()
        },
        iterations: 3,
        ..Default::default()
    }
}

#[test]
fn comparative_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        algorithms: vec![Algorithm::Ttr2, Algorithm::Strada],
        ..small_config(vec![
            write_toy(dir.path(), "one", 120, 1),
            write_toy(dir.path(), "two", 90, 2),
        ])
    };
    let run = run_comparative(&cfg, false).unwrap();
    assert!(run.aborted.is_empty());
    assert_eq!(run.table.rows.len(), 2 * 2 * 3);
    assert_eq!(run.table.summary.len(), 4);
    assert_eq!(run.datasets.len(), 2);
    assert_eq!(run.datasets[0].source_rows + run.datasets[0].target_rows, 120);
    assert!(run.table.rows.iter().all(|r| r.rmse.is_finite() && r.rmse >= 0.0));
}

#[test]
fn missing_dataset_aborts_only_itself() {
    let dir = tempfile::tempdir().unwrap();
    let missing = DatasetSpec {
        path: dir.path().join("nope.csv"),
        ..write_toy(dir.path(), "gone", 10, 3)
    };
    let cfg = small_config(vec![write_toy(dir.path(), "kept", 100, 4), missing]);
    let run = run_comparative(&cfg, true).unwrap();
    assert_eq!(run.aborted.len(), 1);
    assert_eq!(run.aborted[0].dataset, "gone");
    assert!(run.table.rows.iter().all(|r| r.dataset == "kept"));
    assert_eq!(run.table.rows.len(), 3 * 3);
}

#[test]
fn failing_cells_abort_their_dataset() {
    let dir = tempfile::tempdir().unwrap();
    // 12 rows in 3 bins leave 4 target rows; 3 outer folds leave 2 or 3 for
    // training, fewer than the 4 inner folds.
    let cfg = ExperimentConfig {
        outer_folds: 3,
        strada: StradaConfig {
            folds: 4,
            ..small_config(vec![]).strada
        },
        ..small_config(vec![
            write_toy(dir.path(), "tiny", 12, 5),
            write_toy(dir.path(), "fine", 100, 6),
        ])
    };
    let run = run_comparative(&cfg, true).unwrap();
    assert_eq!(
        run.aborted.iter().map(|a| a.dataset.as_str()).collect::<Vec<_>>(),
        ["tiny"]
    );
    assert!(run.table.rows.iter().all(|r| r.dataset == "fine"));
}

#[test]
fn ablation_without_sampling_matches_plain_strada() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        algorithms: vec![Algorithm::Strada],
        sampling: SamplingParams {
            p: Some(usize::MAX),
            k: Some(0),
            ..Default::default()
        },
        ..small_config(vec![write_toy(dir.path(), "toy", 120, 7)])
    };
    let plain = run_comparative(&cfg, true).unwrap();
    let ablated = run_ablation(&cfg, true).unwrap();
    let rmse = |t: &stboost_cli::ResultTable| t.rows.iter().map(|r| r.rmse).collect::<Vec<_>>();
    assert_eq!(rmse(&plain.table), rmse(&ablated.table));
    assert!(ablated.table.rows.iter().all(|r| r.setting == "ablated"));
}

#[test]
fn ablation_changes_only_the_input_pool() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        algorithms: vec![Algorithm::Ttr2],
        sampling: SamplingParams {
            p: Some(10),
            k: Some(0),
            ..Default::default()
        },
        ..small_config(vec![write_toy(dir.path(), "toy", 120, 8)])
    };
    let plain = run_comparative(&cfg, true).unwrap();
    let ablated = run_ablation(&cfg, true).unwrap();
    assert_ne!(plain.table.rows[0].rmse, ablated.table.rows[0].rmse);
    let full = ExperimentConfig {
        sampling: SamplingParams {
            p: Some(usize::MAX),
            ..cfg.sampling
        },
        ..cfg
    };
    let plain = run_comparative(&full, true).unwrap();
    let ablated = run_ablation(&full, true).unwrap();
    assert_eq!(plain.table.rows[0].rmse, ablated.table.rows[0].rmse);
}

#[test]
fn negative_transfer_rows_per_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        algorithms: vec![Algorithm::AdaboostR2, Algorithm::Ttr2],
        target_fractions: vec![0.2, 0.5],
        ..small_config(vec![write_toy(dir.path(), "toy", 150, 9)])
    };
    let run = run_negative_transfer(&cfg, false).unwrap();
    assert_eq!(run.table.summary.len(), 4);
    let settings: Vec<&str> = run.datasets.iter().map(|d| d.setting.as_str()).collect();
    assert_eq!(settings, ["0.2", "0.5"]);
    assert!(run.datasets[0].target_rows < run.datasets[1].target_rows);
}

#[test]
fn sequential_and_parallel_write_the_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(vec![
        write_toy(dir.path(), "a", 100, 10),
        write_toy(dir.path(), "b", 80, 11),
    ]);
    let files = |sequential: bool, sub: &str| {
        let out = dir.path().join(sub);
        let run = run_comparative(&cfg, sequential).unwrap();
        output::write_run(&out, "compare", &cfg, &run).unwrap();
        ["results.csv", "summary.csv", "manifest.json"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    assert_eq!(files(true, "seq"), files(false, "par"));
}
