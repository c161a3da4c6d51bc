use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use stboost_cli::config::{Algorithm, DatasetSpec, ExperimentConfig, OUTPUT_DIR_ENV};
use stboost_cli::{harness, output};
use stboost_core::complexity::Scaling;
use stboost_core::{correlation_split, AlphaMode, LossKind};

#[derive(Parser)]
#[command(
    name = "stboost",
    version,
    about = "Boosting-based transfer regression experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split one CSV into source.csv and target.csv along a feature.
    Split(SplitArgs),
    /// Complexity measures per dataset.
    Complexity(RunArgs),
    /// Compare algorithms over repeated target train/test splits.
    Compare(RunArgs),
    /// Like compare, but every algorithm trains on the sampled pool.
    Ablation(RunArgs),
    /// Sweep the target's share of training data.
    NegativeTransfer(RunArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Target column.
    #[arg(long)]
    target: String,
    /// Split feature; picked automatically when omitted.
    #[arg(long)]
    split_feature: Option<String>,
    #[arg(long, default_value_t = 3)]
    bins: usize,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "results")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config (or a manifest from an earlier run). Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled dataset names (concrete, housing, auto), comma separated.
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
    /// Directory holding the bundled CSVs.
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Extra dataset as NAME=PATH:TARGET[:SPLIT_FEATURE]; repeatable.
    #[arg(long = "dataset")]
    extra: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    outer_folds: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Transfer steps (S).
    #[arg(long)]
    steps: Option<usize>,
    /// Boosting estimators per step (N).
    #[arg(long)]
    estimators: Option<usize>,
    /// Cross-validation folds per step (F).
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    loss: Option<LossKind>,
    /// How alpha enters the strada update: exponent or multiplier.
    #[arg(long)]
    alpha_mode: Option<AlphaMode>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Source rows kept by importance sampling.
    #[arg(long)]
    p: Option<usize>,
    /// Clusters for k-center sampling (0 disables).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Target scaling for c_fe: minmax, zscore or raw.
    #[arg(long)]
    cfe_target: Option<Scaling>,
    /// Target scaling for d_l.
    #[arg(long)]
    dl_target: Option<Scaling>,
    /// Feature scaling for d_i.
    #[arg(long)]
    di_features: Option<Scaling>,
    /// Run cells one at a time.
    #[arg(long)]
    sequential: bool,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
}

fn parse_extra(s: &str) -> anyhow::Result<DatasetSpec> {
    let (name, rest) = s.split_once('=').context("expected NAME=PATH:TARGET[:SPLIT]")?;
    let mut parts = rest.rsplitn(3, ':').collect::<Vec<_>>();
    parts.reverse();
    let (path, target, split) = match parts.as_slice() {
        [path, target] => (*path, *target, None),
        [path, target, split] => (*path, *target, Some(split.to_string())),
        _ => anyhow::bail!("expected NAME=PATH:TARGET[:SPLIT], got {s}"),
    };
    Ok(DatasetSpec {
        name: name.to_string(),
        path: PathBuf::from(path),
        target: target.to_string(),
        split_feature: split,
    })
}

impl RunArgs {
    fn build(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig {
                datasets: DatasetSpec::presets(&self.data_dir),
                ..Default::default()
            },
        };
        if let Some(names) = &self.datasets {
            cfg.datasets = names
                .iter()
                .map(|n| {
                    DatasetSpec::preset(n, &self.data_dir).with_context(|| format!("unknown dataset {n}"))
                })
                .collect::<anyhow::Result<_>>()?;
        }
        if !self.extra.is_empty() {
            if self.datasets.is_none() && self.config.is_none() {
                cfg.datasets.clear();
            }
            for e in &self.extra {
                cfg.datasets.push(parse_extra(e)?);
            }
        }
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(self.algorithms => cfg.algorithms);
        set!(self.iterations => cfg.iterations);
        set!(self.outer_folds => cfg.outer_folds);
        set!(self.bins => cfg.bins);
        set!(self.seed => cfg.seed);
        set!(self.steps => cfg.strada.steps);
        set!(self.estimators => cfg.strada.estimators);
        set!(self.folds => cfg.strada.folds);
        set!(self.alpha => cfg.strada.alpha);
        set!(self.loss => cfg.strada.loss);
        set!(self.alpha_mode => cfg.strada.alpha_mode);
        set!(self.max_depth => cfg.strada.tree.max_depth);
        set!(self.fractions => cfg.target_fractions);
        set!(self.epsilon => cfg.complexity.epsilon);
        set!(self.cfe_target => cfg.complexity.normalization.cfe_target);
        set!(self.dl_target => cfg.complexity.normalization.dl_target);
        set!(self.di_features => cfg.complexity.normalization.di_features);
        set!(self.output_dir => cfg.output_dir);
        if self.p.is_some() {
            cfg.sampling.p = self.p;
        }
        if self.k.is_some() {
            cfg.sampling.k = self.k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_split(args: &SplitArgs) -> anyhow::Result<bool> {
    let ds = stboost_core::load_csv(&args.data, &args.target)?;
    let split = correlation_split(&ds, args.split_feature.as_deref(), args.bins)?;
    std::fs::create_dir_all(&args.output_dir)?;
    output::write_dataset_csv(&split.source, &args.output_dir.join("source.csv"))?;
    output::write_dataset_csv(&split.target, &args.output_dir.join("target.csv"))?;
    let info = serde_json::json!({
        "split_feature": split.split_feature,
        "correlation": split.correlation,
        "bin_edges": split.bin_edges,
        "source_rows": split.source.n_rows(),
        "target_rows": split.target.n_rows(),
    });
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(true)
}

fn run_experiment(command: &str, args: &RunArgs) -> anyhow::Result<bool> {
    let cfg = args.build()?;
    let dir = cfg.output_dir.join(command);
    if command == "complexity" {
        let out = harness::run_complexity(&cfg);
        std::fs::create_dir_all(&dir)?;
        output::write_complexity_csv(&out.reports, std::fs::File::create(dir.join("complexity.csv"))?)?;
        output::write_manifest(
            &output::Manifest::new(command, &cfg, &[], &out.aborted),
            &dir.join("manifest.json"),
        )?;
        output::write_complexity_csv(&out.reports, std::io::stdout())?;
        return Ok(out.aborted.is_empty());
    }
    let outcome = match command {
        "compare" => harness::run_comparative(&cfg, args.sequential)?,
        "ablation" => harness::run_ablation(&cfg, args.sequential)?,
        "negative-transfer" => harness::run_negative_transfer(&cfg, args.sequential)?,
        _ => unreachable!("unknown command {command}"),
    };
    let paths = output::write_run(&dir, command, &cfg, &outcome)?;
    for p in &paths {
        info!("wrote {}", p.display());
    }
    print_summary(&outcome.table, &dir);
    Ok(outcome.aborted.is_empty())
}

fn print_summary(table: &stboost_cli::ResultTable, dir: &Path) {
    println!(
        "{:<10} {:<8} {:<12} {:>10} {:>10} {:>8}",
        "dataset", "setting", "algorithm", "rmse_mean", "rmse_iqr", "r2_mean"
    );
    for s in &table.summary {
        println!(
            "{:<10} {:<8} {:<12} {:>10.4} {:>10.4} {:>8.4}",
            s.dataset, s.setting, s.algorithm, s.rmse.mean, s.rmse.iqr, s.r2.mean
        );
    }
    println!("results in {}", dir.display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Split(a) => run_split(a),
        Command::Complexity(a) => run_experiment("complexity", a),
        Command::Compare(a) => run_experiment("compare", a),
        Command::Ablation(a) => run_experiment("ablation", a),
        Command::NegativeTransfer(a) => run_experiment("negative-transfer", a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more datasets aborted; see the manifest");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
