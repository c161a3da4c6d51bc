use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stboost_core::{
    build_pool, correlation_split, fit_strada, load_csv, standardize, Dataset, Provenance, SamplingConfig,
    StradaConfig, TrainingPool,
};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn rows_of(ds: &Dataset) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = ds
        .features()
        .rows()
        .into_iter()
        .zip(ds.targets().iter())
        .map(|(r, y)| r.iter().chain(std::iter::once(y)).map(|v| v.to_bits()).collect())
        .collect();
    rows.sort();
    rows
}

#[test]
fn bundled_datasets_have_expected_shapes() {
    for (file, target, rows, cols) in [
        ("concrete.csv", "Strength", 1030, 8),
        ("housing.csv", "medv", 506, 13),
        ("auto.csv", "mpg", 392, 7),
    ] {
        let ds = load_csv(data(file), target).unwrap();
        assert_eq!((ds.n_rows(), ds.n_features()), (rows, cols), "{file}");
    }
}

#[test]
fn concrete_split_partitions_rows() {
    let ds = load_csv(data("concrete.csv"), "Strength").unwrap();
    let split = correlation_split(&ds, Some("Cement"), 3).unwrap();
    assert_eq!(split.split_feature, "Cement");
    assert_eq!(split.target.n_rows() + split.source.n_rows(), ds.n_rows());
    assert_eq!(split.target.n_rows(), 1030 / 3);
    let j = ds.feature_index("Cement").unwrap();
    let t_max = split
        .target
        .features()
        .column(j)
        .iter()
        .cloned()
        .fold(f64::MIN, f64::max);
    let s_min = split
        .source
        .features()
        .column(j)
        .iter()
        .cloned()
        .fold(f64::MAX, f64::min);
    assert!(t_max <= s_min);
    let mut both = rows_of(&split.target);
    both.extend(rows_of(&split.source));
    both.sort();
    assert_eq!(both, rows_of(&ds));
}

#[test]
fn split_ignores_input_row_order() {
    let ds = load_csv(data("auto.csv"), "mpg").unwrap();
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let shuffled = ds.select_rows(&order);
    let a = correlation_split(&ds, Some("horsepower"), 3).unwrap();
    let b = correlation_split(&shuffled, Some("horsepower"), 3).unwrap();
    assert_eq!(rows_of(&a.target), rows_of(&b.target));
    assert_eq!(rows_of(&a.source), rows_of(&b.source));
    assert_eq!(a.bin_edges, b.bin_edges);
}

#[test]
fn csv_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "a,b,y\n1,2,3\n4,,6").unwrap();
    assert!(load_csv(&path, "y").is_err());
    assert!(load_csv(&path, "missing").is_err());
    assert!(load_csv(dir.path().join("nope.csv"), "y").is_err());
}

#[test]
fn full_pool_equals_concatenation() {
    let ds = load_csv(data("housing.csv"), "medv").unwrap();
    let split = correlation_split(&ds, Some("nox"), 3).unwrap();
    let cfg = SamplingConfig {
        p: split.source.n_rows(),
        k: 0,
        ..SamplingConfig::defaults_for(split.source.n_rows(), split.target.n_rows(), 0)
    };
    let pool = build_pool(&split.source, &split.target, &cfg).unwrap();
    assert_eq!(pool, TrainingPool::concat(&split.source, &split.target).unwrap());
}

#[test]
fn sampled_pool_on_real_data() {
    let ds = load_csv(data("concrete.csv"), "Strength").unwrap();
    let split = correlation_split(&ds, Some("Cement"), 3).unwrap();
    let cfg = SamplingConfig::defaults_for(split.source.n_rows(), split.target.n_rows(), 4);
    let pool = build_pool(&split.source, &split.target, &cfg).unwrap();
    assert_eq!(pool.p, split.source.n_rows().div_ceil(2));
    let promoted = pool.count(Provenance::SourceAsTarget);
    assert!(promoted >= 1 && promoted <= cfg.k);
    assert_eq!(pool.q, split.target.n_rows() + promoted);

    let model = fit_strada(
        &pool,
        &StradaConfig {
            steps: 3,
            estimators: 5,
            folds: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let preds = model.predict_matrix(split.target.features()).unwrap();
    assert!(preds.iter().all(|v| v.is_finite()));
}

#[test]
fn standardization_round_trips_through_json() {
    let ds = load_csv(data("auto.csv"), "mpg").unwrap();
    let (z, stats) = standardize(&ds, None).unwrap();
    let json = stats.to_json().unwrap();
    let back = stboost_core::Standardization::from_json(&json, ds.feature_names()).unwrap();
    let x = back.inverse_matrix(z.features()).unwrap();
    for (a, b) in x.iter().zip(ds.features().iter()) {
        assert!((a - b).abs() < 1e-9);
    }
}
