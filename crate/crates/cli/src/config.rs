//! Experiment configuration, JSON round-trippable.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stboost_core::complexity::ComplexityOptions;
use stboost_core::{Metric, StradaConfig};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "STBOOST_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    AdaboostR2,
    Ttr2,
    Strada,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::AdaboostR2, Algorithm::Ttr2, Algorithm::Strada];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::AdaboostR2 => "adaboost_r2",
            Algorithm::Ttr2 => "ttr2",
            Algorithm::Strada => "strada",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "adaboost_r2" | "adaboost" => Ok(Algorithm::AdaboostR2),
            "ttr2" => Ok(Algorithm::Ttr2),
            "strada" => Ok(Algorithm::Strada),
            other => Err(format!(
                "unknown algorithm '{other}' (expected adaboost_r2, ttr2 or strada)"
            )),
        }
    }
}

/// One dataset: where it lives, its target column and (optionally) the
/// feature to split on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub target: String,
    #[serde(default)]
    pub split_feature: Option<String>,
}

impl DatasetSpec {
    /// The three bundled datasets, looked up in `data_dir`.
    pub fn preset(name: &str, data_dir: &Path) -> Option<DatasetSpec> {
        let (file, target, split) = match name {
            "concrete" => ("concrete.csv", "Strength", "Cement"),
            "housing" => ("housing.csv", "medv", "nox"),
            "auto" => ("auto.csv", "mpg", "horsepower"),
            _ => return None,
        };
        Some(DatasetSpec {
            name: name.to_string(),
            path: data_dir.join(file),
            target: target.to_string(),
            split_feature: Some(split.to_string()),
        })
    }

    pub fn presets(data_dir: &Path) -> Vec<DatasetSpec> {
        ["concrete", "housing", "auto"]
            .iter()
            .filter_map(|n| DatasetSpec::preset(n, data_dir))
            .collect()
    }
}

/// Sampling parameters. `None` means the per-dataset default
/// (`p = ceil(n / 2)`, `k = min(10, m / 2)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub p: Option<usize>,
    pub k: Option<usize>,
    /// In ablation runs, targets with fewer training rows than this skip
    /// k-center sampling.
    pub small_target_cutoff: usize,
    pub standardize: bool,
    pub metric: Metric,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            p: None,
            k: None,
            small_target_cutoff: 200,
            standardize: true,
            metric: Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub algorithms: Vec<Algorithm>,
    pub strada: StradaConfig,
    pub sampling: SamplingParams,
    pub iterations: usize,
    /// Folds of the outer target train/test split. Iteration `i` tests on
    /// fold `i % outer_folds` of shuffle number `i / outer_folds`.
    pub outer_folds: usize,
    /// Equal-frequency bins for the source/target split.
    pub bins: usize,
    pub target_fractions: Vec<f64>,
    pub complexity: ComplexityOptions,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: DatasetSpec::presets(Path::new("data")),
            algorithms: Algorithm::ALL.to_vec(),
            strada: StradaConfig::default(),
            sampling: SamplingParams::default(),
            iterations: 20,
            outer_folds: 5,
            bins: 3,
            target_fractions: vec![0.35, 0.63],
            complexity: ComplexityOptions::default(),
            seed: 0,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Checks the parts that do not depend on the data. Dataset paths are
    /// checked per dataset at run time so one missing file does not stop
    /// the others.
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.iterations >= 1, "iterations must be at least 1");
        anyhow::ensure!(self.outer_folds >= 2, "outer_folds must be at least 2");
        anyhow::ensure!(self.bins >= 2, "bins must be at least 2");
        anyhow::ensure!(!self.datasets.is_empty(), "no datasets configured");
        anyhow::ensure!(!self.algorithms.is_empty(), "no algorithms configured");
        for f in &self.target_fractions {
            anyhow::ensure!(*f > 0.0 && *f < 1.0, "target fraction {f} outside (0, 1)");
        }
        self.strada.validate()?;
        Ok(())
    }

    /// Reads either a bare config or a run manifest (whose `config` field is
    /// used).
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let inner = match value.get("config") {
            Some(cfg) if value.get("tool").is_some() => cfg.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(inner)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        assert_eq!("AdaBoost-R2".parse::<Algorithm>().unwrap(), Algorithm::AdaboostR2);
        assert!("kmm".parse::<Algorithm>().is_err());
        assert_eq!(format!("{:<6}|", Algorithm::Ttr2), "ttr2  |");
    }

    #[test]
    fn presets_know_their_split_features() {
        let specs = DatasetSpec::presets(Path::new("d"));
        let got: Vec<_> = specs
            .iter()
            .map(|s| (s.name.as_str(), s.split_feature.as_deref()))
            .collect();
        assert_eq!(
            got,
            [
                ("concrete", Some("Cement")),
                ("housing", Some("nox")),
                ("auto", Some("horsepower"))
            ]
        );
        assert_eq!(specs[1].path, Path::new("d/housing.csv"));
        assert!(DatasetSpec::preset("kin8nm", Path::new("d")).is_none());
    }

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.iterations, 20);
        assert_eq!(cfg.target_fractions, [0.35, 0.63]);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"iterations": 3, "algorithms": ["strada"]}"#).unwrap();
        assert_eq!(cfg.iterations, 3);
        assert_eq!(cfg.algorithms, [Algorithm::Strada]);
        assert_eq!(cfg.outer_folds, 5);
        assert_eq!(cfg.sampling.small_target_cutoff, 200);
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let cfg = ExperimentConfig {
            seed: 9,
            ..Default::default()
        };
        let manifest = serde_json::json!({"tool": "stboost", "command": "compare", "config": cfg});
        assert_eq!(ExperimentConfig::from_json(&manifest.to_string()).unwrap(), cfg);
    }

    #[test]
    fn validate_rejects_bad_values() {
        let bad = [
            ExperimentConfig {
                iterations: 0,
                ..Default::default()
            },
            ExperimentConfig {
                outer_folds: 1,
                ..Default::default()
            },
            ExperimentConfig {
                bins: 1,
                ..Default::default()
            },
            ExperimentConfig {
                datasets: vec![],
                ..Default::default()
            },
            ExperimentConfig {
                algorithms: vec![],
                ..Default::default()
            },
            ExperimentConfig {
                target_fractions: vec![1.0],
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
