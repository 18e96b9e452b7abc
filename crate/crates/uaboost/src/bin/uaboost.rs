use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uaboost::data::{load_parkinsons, NoiseProfile, SyntheticSpec};
use uaboost::experiment::{
    run_experiment, write_calibration_tables, write_entropy_tables, write_report,
    write_synthetic_csvs, DatasetSpec, ExperimentConfig, LearnerSpec,
};
use uaboost::forest::ForestConfig;
use uaboost::mlp::MlpConfig;
use uaboost::{EnsembleMode, Error};

const DATA_DIR_ENV: &str = "UABOOST_DATA_DIR";
const PARKINSONS_FILE: &str = "parkinsons_updrs.data";

#[derive(Parser)]
#[command(name = "uaboost", version, about = "Uncertainty-aware boosted ensembling for multi-modal regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validated benchmark and write a JSON report.
    Benchmark(ExperimentArgs),
    /// Run the benchmark and write calibration-curve tables (CSV).
    Calibration(ExperimentArgs),
    /// Run the benchmark and write per-stage entropy KDE tables (CSV).
    Entropy(ExperimentArgs),
    /// Generate a synthetic multi-modal dataset and write it as CSVs.
    Synth(SynthArgs),
    /// Verify a local copy of the Parkinson's telemonitoring CSV.
    Fetch(FetchArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Dataset source: "synthetic", "parkinsons:<path>", or "parkinsons"
    /// (resolved against $UABOOST_DATA_DIR).
    #[arg(long, default_value = "synthetic")]
    dataset: String,

    /// Base learner: "forest" or "mlp".
    #[arg(long, default_value = "forest")]
    learner: String,

    /// Ensemble mode: "vanilla", "ua", "ua-weighted", or "all".
    #[arg(long, default_value = "all")]
    mode: String,

    /// Cross-validation folds (fixed-sample datasets).
    #[arg(long, default_value_t = 5)]
    folds: usize,

    /// Repeated runs (synthetic datasets).
    #[arg(long, default_value_t = 5)]
    repeats: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Forest size; ignored for the MLP learner.
    #[arg(long, default_value_t = 300)]
    trees: usize,

    /// Output directory for reports and tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Group cross-validation folds by subject id (Parkinson's only).
    #[arg(long, default_value_t = false)]
    group_by_subject: bool,

    /// Interval half-width in sigma multiples for MPIW.
    #[arg(long, default_value_t = 1.0)]
    mpiw_delta: f64,

    /// JSON file with a full experiment configuration; overrides the flags
    /// above (except --out).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n_samples: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Target noise profile: "homoscedastic" or "heteroscedastic".
    #[arg(long, default_value = "heteroscedastic")]
    noise: String,

    /// Target noise scale.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct FetchArgs {
    /// Path to the downloaded CSV; defaults to $UABOOST_DATA_DIR/parkinsons_updrs.data.
    #[arg(long)]
    path: Option<PathBuf>,
}

fn resolve_parkinsons_path(explicit: Option<&str>) -> Result<PathBuf, Error> {
    match explicit {
        Some(p) if !p.is_empty() => Ok(PathBuf::from(p)),
        _ => match std::env::var(DATA_DIR_ENV) {
            Ok(dir) => Ok(PathBuf::from(dir).join(PARKINSONS_FILE)),
            Err(_) => Err(Error::InvalidConfig(format!(
                "no dataset path given and {} is not set",
                DATA_DIR_ENV
            ))),
        },
    }
}

fn parse_modes(s: &str) -> Result<Vec<EnsembleMode>, Error> {
    if s == "all" {
        return Ok(EnsembleMode::ALL.to_vec());
    }
    Ok(vec![s.parse()?])
}

fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        return Ok(cfg);
    }

    let dataset = if args.dataset == "synthetic" {
        DatasetSpec::Synthetic(SyntheticSpec::default_with_seed(args.seed))
    } else if args.dataset == "parkinsons" || args.dataset.starts_with("parkinsons:") {
        let path = resolve_parkinsons_path(args.dataset.strip_prefix("parkinsons:"))?;
        DatasetSpec::Parkinsons { path, group_by_subject: args.group_by_subject }
    } else {
        return Err(Error::InvalidConfig(format!(
            "unknown dataset '{}'; expected synthetic, parkinsons, or parkinsons:<path>",
            args.dataset
        )));
    };

    let learner = match args.learner.as_str() {
        "forest" => LearnerSpec::Forest(ForestConfig {
            n_trees: args.trees,
            ..ForestConfig::default()
        }),
        "mlp" => LearnerSpec::Mlp(MlpConfig::default()),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown learner '{}'; expected forest or mlp",
                other
            )))
        }
    };

    let cfg = ExperimentConfig {
        dataset,
        learner,
        modes: parse_modes(&args.mode)?,
        folds: args.folds,
        repeats: args.repeats,
        seed: args.seed,
        mpiw_delta: args.mpiw_delta,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Benchmark(args) => {
            let cfg = build_config(&args)?;
            let outcome = run_experiment(&cfg)?;
            let path = write_report(&outcome.report, &args.out)?;
            println!("wrote {}", path.display());
            for (mode, metrics) in &outcome.report.modes {
                println!(
                    "{:<12} rmse {:.4} +/- {:.4}",
                    mode, metrics.rmse.mean, metrics.rmse.std
                );
            }
            for (id, stat) in &outcome.report.individual_rmse {
                println!("{:<12} rmse {:.4} +/- {:.4} (individual)", id, stat.mean, stat.std);
            }
            Ok(())
        }
        Command::Calibration(args) => {
            let cfg = build_config(&args)?;
            let outcome = run_experiment(&cfg)?;
            for path in write_calibration_tables(&outcome.report, &args.out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Entropy(args) => {
            let cfg = build_config(&args)?;
            let outcome = run_experiment(&cfg)?;
            for path in write_entropy_tables(&outcome, &args.out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Synth(args) => {
            let noise = match args.noise.as_str() {
                "homoscedastic" => NoiseProfile::Homoscedastic(args.sigma),
                "heteroscedastic" => NoiseProfile::Heteroscedastic(args.sigma),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown noise profile '{}'",
                        other
                    )))
                }
            };
            let mut spec = SyntheticSpec::default_with_seed(args.seed);
            spec.n_samples = args.n_samples;
            spec.target_noise = noise;
            spec.validate()?;
            for path in write_synthetic_csvs(&spec, &args.out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Fetch(args) => {
            let path = match args.path {
                Some(p) => p,
                None => resolve_parkinsons_path(None)?,
            };
            if !path.exists() {
                return Err(Error::InvalidConfig(format!(
                    "{} not found; download the UCI Parkinson's telemonitoring CSV there \
                     (see README for the source), then re-run fetch to verify it",
                    path.display()
                )));
            }
            let bytes = std::fs::read(&path)?;
            let digest = {
                use sha2::{Digest, Sha256};
                let mut h = Sha256::new();
                h.update(&bytes);
                format!("{:x}", h.finalize())
            };
            let records = load_parkinsons(&path)?;
            let subjects: std::collections::BTreeSet<u32> =
                records.iter().map(|r| r.subject_id).collect();
            println!("{}", path.display());
            println!("sha256 {}", digest);
            println!("{} records, {} subjects", records.len(), subjects.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            match e {
                Error::InvalidConfig(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
