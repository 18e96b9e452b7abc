//! Acceptance suite: one test (and one printed PASS/FAIL/SKIP line) per
//! criterion. Criteria 1-3 need the UCI Parkinson's telemonitoring CSV; they
//! print SKIP when the file is not present (set UABOOST_PARKINSONS or
//! UABOOST_DATA_DIR, see README).

use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uaboost::core::{
    fuse_inverse_uncertainty, fuse_mean, BaseLearner, EnsembleMode, ModalityMatrix,
    ProbabilisticPrediction, SampleWeightVector, TargetVector,
};
use uaboost::data::{generate_synthetic, SyntheticSpec};
use uaboost::experiment::{
    run_experiment, DatasetSpec, ExperimentConfig, ExperimentOutcome, LearnerSpec,
};
use uaboost::forest::{BootstrapRecord, ForestConfig, ForestLearner};
use uaboost::metrics::calibration_curve;
use uaboost::mlp::{GaussianNet, MlpConfig, MlpLearner};

fn verdict(criterion: usize, status: &str, detail: &str) {
    println!("criterion {:2}: {:4} - {}", criterion, status, detail);
}

fn parkinsons_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("UABOOST_PARKINSONS") {
        let p = PathBuf::from(p);
        return p.exists().then_some(p);
    }
    if let Ok(dir) = std::env::var("UABOOST_DATA_DIR") {
        let p = PathBuf::from(dir).join("parkinsons_updrs.data");
        return p.exists().then_some(p);
    }
    None
}

/// Full 5-fold forest benchmarks on Parkinson's for seeds 0..5, shared by
/// criteria 1-3. None when the dataset file is absent.
fn parkinsons_outcomes() -> &'static Option<Vec<ExperimentOutcome>> {
    static OUTCOMES: OnceLock<Option<Vec<ExperimentOutcome>>> = OnceLock::new();
    OUTCOMES.get_or_init(|| {
        let path = parkinsons_path()?;
        let outcomes = (0..5u64)
            .map(|seed| {
                let cfg = ExperimentConfig {
                    dataset: DatasetSpec::Parkinsons {
                        path: path.clone(),
                        group_by_subject: false,
                    },
                    learner: LearnerSpec::Forest(ForestConfig::default()),
                    modes: EnsembleMode::ALL.to_vec(),
                    folds: 5,
                    repeats: 5,
                    seed,
                    mpiw_delta: 1.0,
                };
                run_experiment(&cfg).expect("parkinsons benchmark failed")
            })
            .collect();
        Some(outcomes)
    })
}

const SKIP_DETAIL: &str =
    "Parkinson's CSV not found (set UABOOST_PARKINSONS or UABOOST_DATA_DIR)";

#[test]
fn criterion_01_parkinsons_rmse_reproduction() {
    let Some(outcomes) = parkinsons_outcomes() else {
        verdict(1, "SKIP", SKIP_DETAIL);
        return;
    };

    // Reference cells, tolerance +/- 0.4.
    let seed0 = &outcomes[0].report;
    let mut cells = vec![
        ("Amplitude", seed0.individual_rmse["Amplitude"].mean, 3.21),
        ("Frequency", seed0.individual_rmse["Frequency"].mean, 3.32),
        ("vanilla", seed0.modes["vanilla"].rmse.mean, 3.18),
        ("ua", seed0.modes["ua"].rmse.mean, 3.04),
        ("ua-weighted", seed0.modes["ua-weighted"].rmse.mean, 3.05),
    ];
    let cells_ok = cells.iter().all(|(_, got, want)| (got - want).abs() <= 0.4);

    // Ordering properties across seeds.
    let mut ordering_hits = 0;
    for outcome in outcomes.iter() {
        let r = &outcome.report;
        let worst_individual = r
            .individual_rmse
            .values()
            .map(|s| s.mean)
            .fold(f64::NEG_INFINITY, f64::max);
        let ua_beats_vanilla = r.modes["ua"].rmse.mean < r.modes["vanilla"].rmse.mean;
        let ensembles_beat_worst =
            r.modes.values().all(|m| m.rmse.mean < worst_individual);
        if ua_beats_vanilla && ensembles_beat_worst {
            ordering_hits += 1;
        }
    }
    let ordering_ok = ordering_hits >= 4;

    let detail = format!(
        "cells {:?}; ordering holds in {}/5 seeds",
        cells
            .drain(..)
            .map(|(name, got, want)| format!("{} {:.3} (ref {:.2})", name, got, want))
            .collect::<Vec<_>>(),
        ordering_hits
    );
    if cells_ok && ordering_ok {
        verdict(1, "PASS", &detail);
    } else {
        verdict(1, "FAIL", &detail);
        panic!("criterion 1 failed: {}", detail);
    }
}

#[test]
fn criterion_02_picp_monotonicity_and_levels() {
    // The nesting property is exact on any data; exercise it on synthetic
    // runs unconditionally so the property part never goes untested.
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Synthetic(SyntheticSpec {
            n_samples: 400,
            ..SyntheticSpec::default_with_seed(2)
        }),
        learner: LearnerSpec::Forest(ForestConfig {
            n_trees: 40,
            ..ForestConfig::default()
        }),
        modes: EnsembleMode::ALL.to_vec(),
        folds: 5,
        repeats: 2,
        seed: 2,
        mpiw_delta: 1.0,
    };
    let synthetic = run_experiment(&cfg).unwrap();
    for runs in synthetic.per_mode_runs.values() {
        for run in runs {
            for m in run.modalities.values() {
                assert!(m.picp[0] <= m.picp[1] && m.picp[1] <= m.picp[2]);
            }
        }
    }

    let Some(outcomes) = parkinsons_outcomes() else {
        verdict(2, "SKIP", &format!("{}; PICP nesting verified on synthetic runs", SKIP_DETAIL));
        return;
    };

    let mut monotone = true;
    for outcome in outcomes.iter() {
        for runs in outcome.per_mode_runs.values() {
            for run in runs {
                for m in run.modalities.values() {
                    monotone &= m.picp[0] <= m.picp[1] && m.picp[1] <= m.picp[2];
                }
            }
        }
    }
    let picp3 = outcomes[0].report.modes["ua"].modalities["Frequency"].picp[2].mean;
    let level_ok = picp3 >= 95.0;
    let detail = format!(
        "PICP nesting on every fold: {}; UA Frequency PICP@3sigma {:.2}% (ref 99.33, pass >= 95)",
        monotone, picp3
    );
    if monotone && level_ok {
        verdict(2, "PASS", &detail);
    } else {
        verdict(2, "FAIL", &detail);
        panic!("criterion 2 failed: {}", detail);
    }
}

#[test]
fn criterion_03_mpiw_tightening() {
    let Some(outcomes) = parkinsons_outcomes() else {
        verdict(3, "SKIP", SKIP_DETAIL);
        return;
    };
    let mut hits = 0;
    let mut pairs = Vec::new();
    for outcome in outcomes.iter() {
        let r = &outcome.report;
        let ua = r.modes["ua"].modalities["Frequency"].mpiw.mean;
        let vanilla = r.modes["vanilla"].modalities["Frequency"].mpiw.mean;
        if ua < vanilla {
            hits += 1;
        }
        pairs.push(format!("{:.3}<{:.3}", ua, vanilla));
    }
    let detail = format!(
        "UA vs vanilla Frequency MPIW per seed [{}]; tighter in {}/5",
        pairs.join(", "),
        hits
    );
    if hits >= 4 {
        verdict(3, "PASS", &detail);
    } else {
        verdict(3, "FAIL", &detail);
        panic!("criterion 3 failed: {}", detail);
    }
}

#[test]
fn criterion_04_fusion_properties() {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let strategy = (1usize..=5, 1usize..=20).prop_flat_map(|(k, n)| {
        (
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, n), k),
            prop::collection::vec(prop::collection::vec(1e-3f64..1e3, n), k),
            1e-3f64..1e3,
        )
    });
    runner
        .run(&strategy, |(means, sigmas, scale)| {
            let n = means[0].len();

            // Equal sigmas collapse Eq. (1) to the plain mean.
            let shared = sigmas[0].clone();
            let equal: Vec<ProbabilisticPrediction> = means
                .iter()
                .map(|m| ProbabilisticPrediction::new(m.clone(), shared.clone()).unwrap())
                .collect();
            let fused_eq = fuse_inverse_uncertainty(&equal).unwrap();
            let plain = fuse_mean(&equal).unwrap();
            for (a, b) in fused_eq.iter().zip(&plain) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }

            // Rescaling every sigma by a common constant leaves Eq. (1)
            // unchanged, and the output is a convex combination.
            let preds: Vec<ProbabilisticPrediction> = means
                .iter()
                .zip(&sigmas)
                .map(|(m, s)| ProbabilisticPrediction::new(m.clone(), s.clone()).unwrap())
                .collect();
            let scaled: Vec<ProbabilisticPrediction> = means
                .iter()
                .zip(&sigmas)
                .map(|(m, s)| {
                    let s: Vec<f64> = s.iter().map(|v| v * scale).collect();
                    ProbabilisticPrediction::new(m.clone(), s).unwrap()
                })
                .collect();
            let fused = fuse_inverse_uncertainty(&preds).unwrap();
            let fused_scaled = fuse_inverse_uncertainty(&scaled).unwrap();
            for i in 0..n {
                prop_assert!(
                    (fused[i] - fused_scaled[i]).abs() <= 1e-12 * fused[i].abs().max(1.0)
                );
                let lo = means.iter().map(|m| m[i]).fold(f64::INFINITY, f64::min);
                let hi = means.iter().map(|m| m[i]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(fused[i] >= lo - 1e-9 && fused[i] <= hi + 1e-9);
            }
            Ok(())
        })
        .unwrap();
    verdict(4, "PASS", "1000 random instances: equal-sigma collapse, sigma-scale invariance, convexity");
}

#[test]
fn criterion_05_nll_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let input_dim = rng.gen_range(1..=4);
        let hidden: Vec<usize> = (0..rng.gen_range(1..=2))
            .map(|_| rng.gen_range(2..=6))
            .collect();
        let mut net = GaussianNet::new(input_dim, &hidden, &mut rng);
        // Perturb away from the symmetric init.
        let params: Vec<f64> = net
            .params()
            .iter()
            .map(|p| p + 0.1 * (rng.gen::<f64>() - 0.5))
            .collect();
        net.set_params(&params);

        let n = rng.gen_range(3..=8);
        let xs_owned: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..input_dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let xs: Vec<&[f64]> = xs_owned.iter().map(|v| v.as_slice()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();

        let (_, grad) = net.loss_and_grad(&xs, &y, &w);
        let step = 1e-5;
        for j in 0..net.n_params() {
            let mut plus = params.clone();
            plus[j] += step;
            net.set_params(&plus);
            let (lp, _) = net.loss_and_grad(&xs, &y, &w);
            let mut minus = params.clone();
            minus[j] -= step;
            net.set_params(&minus);
            let (lm, _) = net.loss_and_grad(&xs, &y, &w);
            net.set_params(&params);
            let numeric = (lp - lm) / (2.0 * step);
            let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs()).max(1e-4);
            worst = worst.max(rel);
        }
    }
    let detail = format!("20 random networks, worst relative gradient error {:.2e}", worst);
    if worst < 1e-5 {
        verdict(5, "PASS", &detail);
    } else {
        verdict(5, "FAIL", &detail);
        panic!("criterion 5 failed: {}", detail);
    }
}

#[test]
fn criterion_06_gaussian_mle_oracle() {
    // x-independent targets: a constant input makes the NLL minimizer exactly
    // the sample mean and (population) sample std.
    let n = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let x = ModalityMatrix::from_rows(
        "const",
        (0..n).map(|_| vec![0.0]).collect(),
        vec!["c".into()],
    )
    .unwrap();
    let ys: Vec<f64> = (0..n).map(|_| 3.0 + 2.0 * normal(&mut rng)).collect();
    let sample_mean = ys.iter().sum::<f64>() / n as f64;
    let sample_std =
        (ys.iter().map(|y| (y - sample_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let y = TargetVector::new(ys).unwrap();

    let mut learner = MlpLearner::new(MlpConfig {
        hidden_layer_sizes: vec![16, 8],
        max_epochs: 4000,
        patience: 0,
        ..MlpConfig::default()
    });
    learner.fit(&x, &y, &SampleWeightVector::uniform(n)).unwrap();
    let pred = learner.predict(&x).unwrap();
    let mu = pred.means().iter().sum::<f64>() / n as f64;
    let sigma = pred.sigmas().iter().sum::<f64>() / n as f64;

    let mu_err = (mu - sample_mean).abs() / sample_mean.abs();
    let sigma_err = (sigma - sample_std).abs() / sample_std;
    let detail = format!(
        "fitted ({:.4}, {:.4}) vs sample ({:.4}, {:.4}); rel err ({:.2}%, {:.2}%)",
        mu, sigma, sample_mean, sample_std, 100.0 * mu_err, 100.0 * sigma_err
    );
    if mu_err < 0.05 && sigma_err < 0.10 {
        verdict(6, "PASS", &detail);
    } else {
        verdict(6, "FAIL", &detail);
        panic!("criterion 6 failed: {}", detail);
    }
}

#[test]
fn criterion_07_infinitesimal_jackknife_oracle() {
    let n = 100;
    let b = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let x = ModalityMatrix::from_rows(
        "t",
        (0..n)
            .map(|i| vec![(i as f64) * 0.07, ((i * 13) % 31) as f64 * 0.3])
            .collect(),
        vec!["f0".into(), "f1".into()],
    )
    .unwrap();
    let y = TargetVector::new(
        (0..n)
            .map(|i| (i as f64 * 0.07).sin() + ((i * 7) % 5) as f64 * 0.1)
            .collect(),
    )
    .unwrap();
    // Injected bootstrap counts.
    let rows: Vec<Vec<u32>> = (0..b)
        .map(|_| {
            let mut c = vec![0u32; n];
            for _ in 0..n {
                c[rng.gen_range(0..n)] += 1;
            }
            c
        })
        .collect();

    let mut forest = ForestLearner::new(ForestConfig {
        n_trees: b,
        min_samples_leaf: 3,
        seed: 707,
        ..ForestConfig::default()
    });
    forest
        .fit_with_bootstrap(
            &x,
            &y,
            &SampleWeightVector::uniform(n),
            BootstrapRecord::new(rows.clone()).unwrap(),
        )
        .unwrap();

    // Independent direct evaluation: V = sum_i Cov_b(N_bi, t_b)^2, minus the
    // bias correction (N/B^2) * sum_b (t_b - t_bar)^2, floored at zero.
    let mut worst: f64 = 0.0;
    for q in (0..n).step_by(7) {
        let row = x.row(q).to_vec();
        let t = forest.tree_outputs(&row).unwrap();
        let t_bar = t.iter().sum::<f64>() / b as f64;
        let mut v = 0.0;
        for i in 0..n {
            let counts: Vec<f64> = rows.iter().map(|r| r[i] as f64).collect();
            let c_bar = counts.iter().sum::<f64>() / b as f64;
            let cov = counts
                .iter()
                .zip(&t)
                .map(|(c, tb)| (c - c_bar) * (tb - t_bar))
                .sum::<f64>()
                / b as f64;
            v += cov * cov;
        }
        let spread: f64 = t.iter().map(|tb| (tb - t_bar) * (tb - t_bar)).sum();
        let expected = (v - (n as f64) / ((b * b) as f64) * spread).max(0.0);
        let got = forest.ij_variance(&row).unwrap();
        worst = worst.max((got - expected).abs());
    }
    let detail = format!(
        "50-tree, 100-sample forest with injected counts; worst |diff| {:.2e}",
        worst
    );
    if worst <= 1e-10 {
        verdict(7, "PASS", &detail);
    } else {
        verdict(7, "FAIL", &detail);
        panic!("criterion 7 failed: {}", detail);
    }
}

#[test]
fn criterion_08_calibration_monte_carlo_oracle() {
    let spec = SyntheticSpec::default_with_seed(808);
    assert_eq!(spec.n_samples, 2000);
    let dataset = generate_synthetic(&spec).unwrap();
    let pred =
        ProbabilisticPrediction::new(dataset.mu_star.clone(), dataset.sigma_star.clone())
            .unwrap();
    let curve = calibration_curve(&pred, &dataset.targets).unwrap();
    let worst = curve
        .nominal_levels
        .iter()
        .zip(&curve.observed_fractions)
        .map(|(n, o)| (n - o).abs())
        .fold(0.0f64, f64::max);
    let detail = format!(
        "true (mu*, sigma*) as predictions at N=2000; worst |observed - nominal| {:.4}",
        worst
    );
    if worst <= 0.03 {
        verdict(8, "PASS", &detail);
    } else {
        verdict(8, "FAIL", &detail);
        panic!("criterion 8 failed: {}", detail);
    }
}

#[test]
fn criterion_09_entropy_reduction() {
    let mut hits = 0;
    let mut details = Vec::new();
    for seed in 0..5u64 {
        let cfg = ExperimentConfig {
            dataset: DatasetSpec::Synthetic(SyntheticSpec {
                n_samples: 1200,
                ..SyntheticSpec::default_with_seed(seed)
            }),
            learner: LearnerSpec::Mlp(MlpConfig {
                hidden_layer_sizes: vec![32, 16],
                max_epochs: 150,
                patience: 20,
                ..MlpConfig::default()
            }),
            modes: vec![EnsembleMode::Ua],
            folds: 5,
            repeats: 1,
            seed,
            mpiw_delta: 1.0,
        };
        let outcome = run_experiment(&cfg).unwrap();
        let stages = &outcome.report.modes["ua"].stage_entropy;
        assert_eq!(stages.len(), 3);
        let first = stages[0].mean_entropy.mean;
        let last = stages[2].mean_entropy.mean;
        if last < first {
            hits += 1;
        }
        details.push(format!("seed {}: {:.3} -> {:.3}", seed, first, last));
    }
    let detail = format!(
        "UA stage-3 vs stage-1 mean entropy [{}]; reduced in {}/5 seeds",
        details.join("; "),
        hits
    );
    if hits >= 4 {
        verdict(9, "PASS", &detail);
    } else {
        verdict(9, "FAIL", &detail);
        panic!("criterion 9 failed: {}", detail);
    }
}

#[test]
fn criterion_10_report_determinism() {
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Synthetic(SyntheticSpec {
            n_samples: 300,
            ..SyntheticSpec::default_with_seed(10)
        }),
        learner: LearnerSpec::Forest(ForestConfig {
            n_trees: 30,
            ..ForestConfig::default()
        }),
        modes: EnsembleMode::ALL.to_vec(),
        folds: 5,
        repeats: 2,
        seed: 10,
        mpiw_delta: 1.0,
    };
    let first = run_experiment(&cfg).unwrap().report;
    // Re-run from the echoed config exactly as an external caller would:
    // serialize, parse back, run again.
    let echoed: ExperimentConfig =
        serde_json::from_str(&serde_json::to_string(&first.config).unwrap()).unwrap();
    let second = run_experiment(&echoed).unwrap().report;

    let strip = |r: &uaboost::experiment::ReportFile| -> serde_json::Value {
        let mut v = serde_json::to_value(r).unwrap();
        v.as_object_mut().unwrap().remove("created_unix");
        v
    };
    let same = strip(&first) == strip(&second);
    let detail = "re-run from echoed config reproduces every numeric field".to_string();
    if same {
        verdict(10, "PASS", &detail);
    } else {
        verdict(10, "FAIL", &detail);
        panic!("criterion 10 failed");
    }
}
