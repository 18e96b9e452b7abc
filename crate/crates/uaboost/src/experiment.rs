//! Experiment orchestration: cross-validated or repeated runs of the three
//! ensembling modes plus individual-modality baselines, with machine-readable
//! reports and plot-ready tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::core::{
    fuse_inverse_uncertainty, fuse_mean, BaseLearner, EnsembleMode, ModalityMatrix,
    ProbabilisticPrediction, SampleWeightVector, TargetVector,
};
use crate::data::{
    generate_synthetic, load_parkinsons, make_folds, make_grouped_folds, split_modalities,
    train_val_split, ModalitySplitSpec, StandardScaler, SyntheticSpec,
};
use crate::ensemble::{boost_fit, predict, rank_modalities};
use crate::error::{Error, Result};
use crate::forest::{ForestConfig, ForestLearner};
use crate::kde::gaussian_kde;
use crate::metrics::{
    aggregate_runs, calibration_curve, calibration_levels, mean_std, mpiw, picp,
    predictive_entropy, rmse, IntervalSpec, MeanStd, MetricsReport, ModalityRun, RunMetrics,
    StageEntropy,
};
use crate::mlp::{MlpConfig, MlpLearner};
use crate::seeding::{derive_seed, derive_seed_str};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum DatasetSpec {
    Parkinsons {
        path: PathBuf,
        #[serde(default)]
        group_by_subject: bool,
    },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LearnerSpec {
    Forest(ForestConfig),
    Mlp(MlpConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub learner: LearnerSpec,
    pub modes: Vec<EnsembleMode>,
    /// Cross-validation folds for dataset sources with a fixed sample set.
    pub folds: usize,
    /// Independent repeated runs for regenerable (synthetic) sources.
    pub repeats: usize,
    pub seed: u64,
    /// Interval half-width in sigma multiples used for MPIW.
    pub mpiw_delta: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("no ensemble modes requested".into()));
        }
        match self.dataset {
            DatasetSpec::Parkinsons { .. } if self.folds < 2 => {
                return Err(Error::InvalidConfig(format!(
                    "fold count {} must be at least 2",
                    self.folds
                )));
            }
            DatasetSpec::Synthetic(_) if self.repeats < 1 => {
                return Err(Error::InvalidConfig("repeats must be at least 1".into()));
            }
            _ => {}
        }
        if !(self.mpiw_delta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "mpiw_delta {} must be positive",
                self.mpiw_delta
            )));
        }
        match &self.learner {
            LearnerSpec::Forest(fc) => fc.validate(),
            LearnerSpec::Mlp(mc) => mc.validate(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    /// Wall-clock creation time (unix seconds); the only field excluded from
    /// the reproducibility contract.
    pub created_unix: u64,
    pub config: ExperimentConfig,
    /// Seed that produced the shared fold plan (or per-run splits).
    pub fold_seed: u64,
    /// Boosting order chosen in each run, with the individual validation RMSE
    /// that fixed it.
    pub orders: Vec<Vec<(String, f64)>>,
    /// Test RMSE of each modality trained alone with uniform weights.
    pub individual_rmse: BTreeMap<String, MeanStd>,
    /// Aggregated metrics per requested ensemble mode.
    pub modes: BTreeMap<String, MetricsReport>,
}

/// Per-sample predictive entropies pooled over runs for one boosting stage.
#[derive(Debug, Clone)]
pub struct StagePool {
    pub modality_id: String,
    pub entropies: Vec<f64>,
}

pub struct ExperimentOutcome {
    pub report: ReportFile,
    /// mode name -> stages in boosting order -> pooled entropies.
    pub entropy_pools: BTreeMap<String, Vec<StagePool>>,
    /// mode name -> un-aggregated per-run metrics, in run order.
    pub per_mode_runs: BTreeMap<String, Vec<RunMetrics>>,
}

fn make_learner(spec: &LearnerSpec, seed: u64) -> Box<dyn BaseLearner> {
    match spec {
        LearnerSpec::Forest(fc) => {
            Box::new(ForestLearner::new(ForestConfig { seed, ..fc.clone() }))
        }
        LearnerSpec::Mlp(mc) => Box::new(MlpLearner::new(MlpConfig { seed, ..mc.clone() })),
    }
}

struct RunData {
    train: BTreeMap<String, ModalityMatrix>,
    test: BTreeMap<String, ModalityMatrix>,
    y_train: TargetVector,
    y_test: TargetVector,
}

fn standardized_run_data(
    modalities: &BTreeMap<String, ModalityMatrix>,
    y: &TargetVector,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<RunData> {
    let mut train = BTreeMap::new();
    let mut test = BTreeMap::new();
    for (id, x) in modalities {
        let x_train = x.subset(train_idx);
        let x_test = x.subset(test_idx);
        let scaler = StandardScaler::fit(&x_train)?;
        train.insert(id.clone(), scaler.transform(&x_train)?);
        test.insert(id.clone(), scaler.transform(&x_test)?);
    }
    Ok(RunData {
        train,
        test,
        y_train: y.subset(train_idx),
        y_test: y.subset(test_idx),
    })
}

/// One run: rank modalities on an inner validation split, fit the individual
/// baselines and the requested boosting chains, and evaluate everything on
/// the held-out rows.
#[allow(clippy::type_complexity)]
fn run_one(
    cfg: &ExperimentConfig,
    data: &RunData,
    run_seed: u64,
) -> Result<(
    Vec<(String, f64)>,
    BTreeMap<String, f64>,
    BTreeMap<EnsembleMode, (RunMetrics, Vec<(String, Vec<f64>)>)>,
)> {
    let n_train = data.y_train.len();
    let learner_seed =
        |id: &str| derive_seed_str(derive_seed(run_seed, 0x5EED), id);

    // Rank modalities by individual RMSE on an inner 80/20 split of the
    // training rows; the held-out test rows never inform the order.
    let (inner_train, inner_val) =
        train_val_split(n_train, 0.2, derive_seed(run_seed, 0x0B0E))?;
    let mut scores = BTreeMap::new();
    for (id, x) in &data.train {
        let mut learner = make_learner(&cfg.learner, derive_seed_str(run_seed, id));
        learner.fit(
            &x.subset(&inner_train),
            &data.y_train.subset(&inner_train),
            &SampleWeightVector::uniform(inner_train.len()),
        )?;
        let pred = learner.predict_point(&x.subset(&inner_val))?;
        scores.insert(id.clone(), rmse(&pred, &data.y_train.subset(&inner_val))?);
    }
    let order = rank_modalities(&scores)?;

    // Individual baselines: each modality alone, uniform weights, full
    // training set.
    let mut individual = BTreeMap::new();
    for (id, x) in &data.train {
        let mut learner = make_learner(&cfg.learner, learner_seed(id));
        learner.fit(x, &data.y_train, &SampleWeightVector::uniform(n_train))?;
        let pred = learner.predict_point(&data.test[id])?;
        individual.insert(id.clone(), rmse(&pred, &data.y_test)?);
    }

    // Fit one chain per weighting scheme. UA and UA-weighted share a chain:
    // they differ only in the fusion rule.
    let need_vanilla = cfg.modes.contains(&EnsembleMode::Vanilla);
    let need_ua = cfg.modes.contains(&EnsembleMode::Ua)
        || cfg.modes.contains(&EnsembleMode::UaWeighted);

    let mut mode_runs = BTreeMap::new();
    let delta = IntervalSpec::new(cfg.mpiw_delta)?;

    let mut evaluate = |fused: Vec<f64>,
                        per_modality: &BTreeMap<String, ProbabilisticPrediction>,
                        mode: EnsembleMode|
     -> Result<()> {
        let mut modality_runs = BTreeMap::new();
        let mut stage_entropies = Vec::new();
        let mut pools = Vec::new();
        for (id, _) in &order {
            let pred = &per_modality[id];
            let entropy = predictive_entropy(pred)?;
            modality_runs.insert(
                id.clone(),
                ModalityRun {
                    mpiw: mpiw(pred, delta)?,
                    picp: (1..=3)
                        .map(|m| picp(pred, &data.y_test, IntervalSpec::new(m as f64)?))
                        .collect::<Result<Vec<f64>>>()?,
                    calibration: calibration_curve(pred, &data.y_test)?,
                },
            );
            stage_entropies.push(StageEntropy {
                modality_id: id.clone(),
                mean_entropy: entropy.mean_entropy,
            });
            pools.push((id.clone(), entropy.per_sample_entropies));
        }
        let run_metrics = RunMetrics {
            rmse: rmse(&fused, &data.y_test)?,
            modalities: modality_runs,
            stage_mean_entropies: stage_entropies,
        };
        mode_runs.insert(mode, (run_metrics, pools));
        Ok(())
    };

    if need_vanilla {
        let mut factory = |id: &str, _stage: usize| make_learner(&cfg.learner, learner_seed(id));
        let (chain, _) =
            boost_fit(EnsembleMode::Vanilla, &data.train, &data.y_train, &mut factory, &order)?;
        let (fused, per_modality) = predict(&chain, &data.test)?;
        evaluate(fused, &per_modality, EnsembleMode::Vanilla)?;
    }
    if need_ua {
        let mut factory = |id: &str, _stage: usize| make_learner(&cfg.learner, learner_seed(id));
        let (chain, _) =
            boost_fit(EnsembleMode::Ua, &data.train, &data.y_train, &mut factory, &order)?;
        let (_, per_modality) = predict(&chain, &data.test)?;
        let in_order: Vec<ProbabilisticPrediction> =
            order.iter().map(|(id, _)| per_modality[id].clone()).collect();
        if cfg.modes.contains(&EnsembleMode::Ua) {
            evaluate(fuse_mean(&in_order)?, &per_modality, EnsembleMode::Ua)?;
        }
        if cfg.modes.contains(&EnsembleMode::UaWeighted) {
            evaluate(
                fuse_inverse_uncertainty(&in_order)?,
                &per_modality,
                EnsembleMode::UaWeighted,
            )?;
        }
    }

    Ok((order, individual, mode_runs))
}

/// Runs the full experiment: builds the run plan from the dataset source,
/// executes every run, and aggregates into a report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let fold_seed = derive_seed(cfg.seed, 0xF01D);

    // (per-run standardized data, per-run seed)
    let mut runs: Vec<(RunData, u64)> = Vec::new();
    match &cfg.dataset {
        DatasetSpec::Parkinsons { path, group_by_subject } => {
            let records = load_parkinsons(path)?;
            let spec = ModalitySplitSpec::parkinsons_default();
            let (modalities, y) = split_modalities(&records, &spec)?;
            let plan = if *group_by_subject {
                let groups: Vec<u32> = records.iter().map(|r| r.subject_id).collect();
                make_grouped_folds(&groups, cfg.folds, fold_seed)?
            } else {
                make_folds(y.len(), cfg.folds, fold_seed)?
            };
            for f in 0..cfg.folds {
                let data = standardized_run_data(
                    &modalities,
                    &y,
                    &plan.train_indices(f),
                    &plan.test_indices(f),
                )?;
                runs.push((data, derive_seed(cfg.seed, f as u64 + 1)));
            }
        }
        DatasetSpec::Synthetic(spec) => {
            for r in 0..cfg.repeats {
                let run_seed = derive_seed(cfg.seed, r as u64 + 1);
                let mut run_spec = spec.clone();
                run_spec.seed = derive_seed(run_seed, 0xDA7A);
                let dataset = generate_synthetic(&run_spec)?;
                let n = dataset.targets.len();
                // 80/20 train/test split per run.
                let (train_idx, test_idx) =
                    train_val_split(n, 0.2, derive_seed(run_seed, 0x59117))?;
                let data = standardized_run_data(
                    &dataset.modalities,
                    &dataset.targets,
                    &train_idx,
                    &test_idx,
                )?;
                runs.push((data, run_seed));
            }
        }
    }

    let mut orders = Vec::new();
    let mut individual_acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut mode_acc: BTreeMap<EnsembleMode, Vec<RunMetrics>> = BTreeMap::new();
    let mut entropy_pools: BTreeMap<String, Vec<StagePool>> = BTreeMap::new();

    for (data, run_seed) in &runs {
        let (order, individual, mode_runs) = run_one(cfg, data, *run_seed)?;
        orders.push(order);
        for (id, v) in individual {
            individual_acc.entry(id).or_default().push(v);
        }
        for (mode, (metrics, pools)) in mode_runs {
            mode_acc.entry(mode).or_default().push(metrics);
            let stages = entropy_pools.entry(mode.as_str().to_string()).or_insert_with(|| {
                pools
                    .iter()
                    .map(|(id, _)| StagePool { modality_id: id.clone(), entropies: Vec::new() })
                    .collect()
            });
            for (stage, (id, entropies)) in pools.into_iter().enumerate() {
                // Runs may rank modalities differently; label the stage with
                // every modality that occupied it.
                let label = &mut stages[stage].modality_id;
                if label.split('|').all(|s| s != id) {
                    label.push('|');
                    label.push_str(&id);
                }
                stages[stage].entropies.extend(entropies);
            }
        }
    }

    let mut modes = BTreeMap::new();
    for (mode, metrics) in &mode_acc {
        modes.insert(mode.as_str().to_string(), aggregate_runs(metrics, cfg.mpiw_delta)?);
    }

    let report = ReportFile {
        schema_version: REPORT_SCHEMA_VERSION,
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config: cfg.clone(),
        fold_seed,
        orders,
        individual_rmse: individual_acc
            .into_iter()
            .map(|(id, vals)| (id, mean_std(&vals)))
            .collect(),
        modes,
    };

    Ok(ExperimentOutcome {
        report,
        entropy_pools,
        per_mode_runs: mode_acc
            .into_iter()
            .map(|(mode, runs)| (mode.as_str().to_string(), runs))
            .collect(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Writes the benchmark report as pretty-printed JSON.
pub fn write_report(report: &ReportFile, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("benchmark_report.json");
    write_file(&path, &(serde_json::to_string_pretty(report)? + "\n"))?;
    Ok(path)
}

/// Calibration plot tables: one CSV per mode (all modalities side by side)
/// and one CSV per modality (all modes side by side). Each has nine data
/// rows, levels 10%..90%.
pub fn write_calibration_tables(report: &ReportFile, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let levels = calibration_levels();
    let mut written = Vec::new();

    // Ensemble-wise panels: per mode, columns are modalities.
    for (mode, metrics) in &report.modes {
        let mut header = vec!["nominal_level".to_string(), "reference".to_string()];
        for id in metrics.modalities.keys() {
            header.push(format!("observed_{}_{}", mode, id));
        }
        let mut body = header.join(",") + "\n";
        for (i, &level) in levels.iter().enumerate() {
            let mut row = vec![format!("{}", level), format!("{}", level)];
            for summary in metrics.modalities.values() {
                row.push(format!("{}", summary.calibration[i].mean));
            }
            body += &(row.join(",") + "\n");
        }
        let path = out_dir.join(format!("calibration_mode_{}.csv", mode));
        write_file(&path, &body)?;
        written.push(path);
    }

    // Modality-wise panels: per modality, columns are modes.
    let modality_ids: Vec<String> = report
        .modes
        .values()
        .next()
        .map(|m| m.modalities.keys().cloned().collect())
        .unwrap_or_default();
    for id in &modality_ids {
        let mut header = vec!["nominal_level".to_string(), "reference".to_string()];
        for mode in report.modes.keys() {
            header.push(format!("observed_{}_{}", mode, id));
        }
        let mut body = header.join(",") + "\n";
        for (i, &level) in levels.iter().enumerate() {
            let mut row = vec![format!("{}", level), format!("{}", level)];
            for metrics in report.modes.values() {
                row.push(format!("{}", metrics.modalities[id].calibration[i].mean));
            }
            body += &(row.join(",") + "\n");
        }
        let path = out_dir.join(format!("calibration_modality_{}.csv", id));
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

/// Entropy plot tables: per mode and boosting stage, a 256-point KDE of the
/// pooled per-sample predictive entropies, stages in boosting order.
pub fn write_entropy_tables(outcome: &ExperimentOutcome, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (mode, stages) in &outcome.entropy_pools {
        for (j, pool) in stages.iter().enumerate() {
            let (grid, density) = gaussian_kde(&pool.entropies, 256);
            let mean_entropy =
                pool.entropies.iter().sum::<f64>() / pool.entropies.len() as f64;
            let mut body = format!(
                "# mode={} stage={} modality={} mean_entropy={}\n",
                mode,
                j + 1,
                pool.modality_id,
                mean_entropy
            );
            body += "entropy,density\n";
            for (g, d) in grid.iter().zip(&density) {
                body += &format!("{},{}\n", g, d);
            }
            let path = out_dir.join(format!("entropy_{}_stage{}.csv", mode, j + 1));
            write_file(&path, &body)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes a generated synthetic dataset as CSVs: one file per modality, one
/// targets file that also carries the ground-truth mu* and sigma* columns.
pub fn write_synthetic_csvs(spec: &SyntheticSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let dataset = generate_synthetic(spec)?;
    let mut written = Vec::new();
    for (id, x) in &dataset.modalities {
        let mut body = x.feature_names().join(",") + "\n";
        for row in x.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{}", v)).collect();
            body += &(cells.join(",") + "\n");
        }
        let path = out_dir.join(format!("modality_{}.csv", id));
        write_file(&path, &body)?;
        written.push(path);
    }
    let mut body = String::from("target,mu_star,sigma_star\n");
    for i in 0..dataset.targets.len() {
        body += &format!(
            "{},{},{}\n",
            dataset.targets.values()[i], dataset.mu_star[i], dataset.sigma_star[i]
        );
    }
    let path = out_dir.join("targets.csv");
    write_file(&path, &body)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{NoiseProfile, SyntheticModality};

    fn tiny_synthetic_config(seed: u64, modes: Vec<EnsembleMode>) -> ExperimentConfig {
        let spec = SyntheticSpec {
            n_samples: 160,
            modalities: vec![
                SyntheticModality {
                    id: "m1".into(),
                    dim: 3,
                    noise: NoiseProfile::Homoscedastic(0.05),
                    sees_noise_latent: false,
                },
                SyntheticModality {
                    id: "m2".into(),
                    dim: 3,
                    noise: NoiseProfile::Homoscedastic(0.15),
                    sees_noise_latent: true,
                },
            ],
            target_noise: NoiseProfile::Heteroscedastic(0.5),
            seed,
        };
        ExperimentConfig {
            dataset: DatasetSpec::Synthetic(spec),
            learner: LearnerSpec::Forest(ForestConfig {
                n_trees: 25,
                min_samples_leaf: 3,
                ..ForestConfig::default()
            }),
            modes,
            folds: 5,
            repeats: 2,
            seed,
            mpiw_delta: 1.0,
        }
    }

    #[test]
    fn synthetic_benchmark_produces_complete_report() {
        let cfg = tiny_synthetic_config(3, EnsembleMode::ALL.to_vec());
        let outcome = run_experiment(&cfg).unwrap();
        let report = &outcome.report;
        assert_eq!(report.schema_version, REPORT_SCHEMA_VERSION);
        assert_eq!(report.orders.len(), 2);
        assert_eq!(report.individual_rmse.len(), 2);
        assert_eq!(report.modes.len(), 3);
        for metrics in report.modes.values() {
            assert_eq!(metrics.n_runs, 2);
            assert_eq!(metrics.modalities.len(), 2);
            assert_eq!(metrics.stage_entropy.len(), 2);
            assert!(metrics.rmse.mean.is_finite());
        }
        // UA and UA-weighted share chains, so their per-modality intervals
        // coincide; only the fused RMSE may differ.
        let ua = &report.modes["ua"];
        let uaw = &report.modes["ua-weighted"];
        for (id, s) in &ua.modalities {
            assert_eq!(s.mpiw.mean, uaw.modalities[id].mpiw.mean);
        }
        // Entropy pools cover both modes' stages with test-set sizes pooled
        // over the two runs (2 x 32 rows).
        for stages in outcome.entropy_pools.values() {
            assert_eq!(stages.len(), 2);
            for pool in stages {
                assert_eq!(pool.entropies.len(), 64);
            }
        }
    }

    #[test]
    fn reports_are_reproducible_from_config() {
        let cfg = tiny_synthetic_config(11, vec![EnsembleMode::Ua]);
        let a = run_experiment(&cfg).unwrap().report;
        // Round-trip the echoed config through JSON, as a re-run would.
        let echoed: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        let b = run_experiment(&echoed).unwrap().report;
        let strip = |mut v: serde_json::Value| {
            v.as_object_mut().unwrap().remove("created_unix");
            v
        };
        assert_eq!(
            strip(serde_json::to_value(&a).unwrap()),
            strip(serde_json::to_value(&b).unwrap())
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = tiny_synthetic_config(1, vec![EnsembleMode::Ua]);
        cfg.modes.clear();
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = tiny_synthetic_config(1, vec![EnsembleMode::Ua]);
        cfg.repeats = 0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = tiny_synthetic_config(1, vec![EnsembleMode::Ua]);
        cfg.mpiw_delta = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn plot_tables_have_expected_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_synthetic_config(5, vec![EnsembleMode::Vanilla, EnsembleMode::Ua]);
        let outcome = run_experiment(&cfg).unwrap();

        let cal = write_calibration_tables(&outcome.report, dir.path()).unwrap();
        // 2 mode panels + 2 modality panels.
        assert_eq!(cal.len(), 4);
        for path in &cal {
            let text = std::fs::read_to_string(path).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines.len(), 10, "header + 9 data rows in {:?}", path);
            assert!(lines[0].starts_with("nominal_level,reference,observed_"));
        }

        let ent = write_entropy_tables(&outcome, dir.path()).unwrap();
        assert_eq!(ent.len(), 4);
        for path in &ent {
            let text = std::fs::read_to_string(path).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines.len(), 2 + 256);
            assert!(lines[0].starts_with("# mode="));
        }
    }

    #[test]
    fn synthetic_export_writes_modalities_and_targets() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec::default_with_seed(9);
        let files = write_synthetic_csvs(&spec, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let targets = std::fs::read_to_string(dir.path().join("targets.csv")).unwrap();
        assert_eq!(targets.lines().count(), 1 + spec.n_samples);
        assert!(targets.starts_with("target,mu_star,sigma_star"));
    }
}
