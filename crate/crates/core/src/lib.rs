//! Instance-transfer regression by boosting.
//!
//! The crate provides S-TrAdaBoost.R2 (importance-sampled transfer boosting),
//! the two-stage TrAdaBoost.R2 baseline it builds on, AdaBoost.R2 over
//! weighted CART trees, k-means based variance sampling, and three dataset
//! complexity measures (feature efficiency, linearity and input smoothness).
//!
//! ```no_run
//! use stboost_core::{build_pool, correlation_split, fit_strada, load_csv, SamplingConfig, StradaConfig};
//!
//! let ds = load_csv("data/concrete.csv", "Strength")?;
//! let split = correlation_split(&ds, Some("Cement"), 3)?;
//! let sampling = SamplingConfig::defaults_for(split.source.n_rows(), split.target.n_rows(), 7);
//! let pool = build_pool(&split.source, &split.target, &sampling)?;
//! let model = fit_strada(&pool, &StradaConfig::default())?;
//! println!("best step {}", model.best_step);
//! # Ok::<(), stboost_core::Error>(())
//! ```

pub mod boosting;
pub mod complexity;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod sampling;
pub mod transfer;
pub mod tree;

pub use boosting::{fit_adaboost_r2, predict_weighted_median, AdaBoostR2, BoostedEnsemble, LossKind};
pub use complexity::{c_fe, complexity_report, d_i, d_l, ols_fit, ComplexityOptions, ComplexityReport};
pub use dataset::{
    correlation_split, kfold, load_csv, pearson_correlation, quantile_split, standardize, Dataset,
    FoldAssignment, Standardization, TransferSplit,
};
pub use error::{Error, Result};
pub use metrics::{r_squared, rmse};
pub use sampling::{
    build_pool, importance_sample, k_center_sample, kmeans, KMeansConfig, KMeansResult, Metric, Provenance,
    SamplingConfig, TrainingPool,
};
pub use transfer::{
    adjusted_error, beta_schedule, cv_step_error, fit_strada, fit_strada_traced, fit_ttr2, fit_ttr2_traced,
    stage_one_reweight, update_weights, AlphaMode, ModelSummary, StepRecord, StradaConfig, TransferAlgorithm,
    TransferModel, WeightTrace,
};
pub use tree::{fit_tree, RegressionTree, TreeConfig};
