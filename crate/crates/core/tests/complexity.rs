use std::path::PathBuf;

use stboost_core::complexity::{c_fe, c_fe_with, d_i, d_i_with, d_l, Scaling};
use stboost_core::{complexity_report, load_csv, ComplexityOptions, Dataset};

fn data(name: &str, target: &str) -> Dataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    load_csv(path, target).unwrap()
}

#[test]
fn linear_data_limits() {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![i as f64, ((i * 13) % 7) as f64, (i as f64).sqrt()])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 4.0 + 0.5 * r[0] - 2.0 * r[1] + r[2])
        .collect();
    let ds = Dataset::from_rows(&rows, &y).unwrap();
    assert!((d_l(&ds).unwrap() - 1.0).abs() <= 1e-9);

    let y1: Vec<f64> = rows.iter().map(|r| 3.0 - r[0]).collect();
    assert_eq!(c_fe(&Dataset::from_rows(&rows, &y1).unwrap(), 0.1).unwrap(), 0.0);
}

#[test]
fn table_orderings_hold() {
    let concrete = data("concrete.csv", "Strength");
    let housing = data("housing.csv", "medv");
    let auto = data("auto.csv", "mpg");
    assert!(c_fe(&concrete, 0.1).unwrap() > c_fe(&housing, 0.1).unwrap());
    assert!(d_i(&housing).unwrap() > d_i(&auto).unwrap());
    // The ordering does not hinge on the scaling choice.
    for s in [Scaling::MinMax, Scaling::ZScore] {
        assert!(c_fe_with(&concrete, 0.1, s).unwrap() > c_fe_with(&housing, 0.1, s).unwrap());
        assert!(d_i_with(&housing, s).unwrap() > d_i_with(&auto, s).unwrap());
    }
}

#[test]
fn report_is_deterministic() {
    let ds = data("housing.csv", "medv");
    let a = complexity_report(&ds, &ComplexityOptions::default()).unwrap();
    let b = complexity_report(&ds, &ComplexityOptions::default()).unwrap();
    assert_eq!(a, b);
    assert!((0.0..=1.0).contains(&a.c_fe));
    assert!(a.d_i >= 0.0);
}
