//! Synthetic workloads shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stboost_core::{Dataset, TrainingPool};

/// `y = sum(x) + shift * x_0 + noise`, features uniform in [-3, 3].
pub fn synthetic(n: usize, d: usize, shift: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().sum::<f64>() + shift * r[0] + rng.random_range(-0.5..0.5))
        .collect();
    Dataset::from_rows(&rows, &y).expect("synthetic rows are finite")
}

/// Source of `n` rows (shifted relation) plus a target of `n / 10` rows.
pub fn synthetic_pool(n: usize, d: usize, seed: u64) -> TrainingPool {
    let source = synthetic(n, d, 0.5, seed);
    let target = synthetic((n / 10).max(10), d, 0.0, seed + 1);
    TrainingPool::concat(&source, &target).expect("same feature count")
}
