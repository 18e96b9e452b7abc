//! Evaluation machinery: RMSE with repeated-run statistics, MPIW, PICP at
//! multiples of sigma, Gaussian-quantile calibration curves, and KDE-based
//! predictive-entropy analysis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::core::ProbabilisticPrediction;
use crate::core::TargetVector;
use crate::error::{Error, Result};
use crate::kde;

/// Prediction-interval half-width in units of sigma.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub delta_multiplier: f64,
}

impl IntervalSpec {
    pub fn new(delta_multiplier: f64) -> Result<Self> {
        if !(delta_multiplier > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "interval multiplier {} must be positive",
                delta_multiplier
            )));
        }
        Ok(Self { delta_multiplier })
    }
}

/// Nominal Gaussian coverage levels versus empirically observed fractions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub nominal_levels: Vec<f64>,
    pub observed_fractions: Vec<f64>,
}

/// Per-sample Gaussian predictive entropies with a KDE summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropySummary {
    pub per_sample_entropies: Vec<f64>,
    pub kde_grid: Vec<f64>,
    pub kde_density: Vec<f64>,
    pub mean_entropy: f64,
}

/// sqrt(mean squared residual).
pub fn rmse(pred: &[f64], y: &TargetVector) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty prediction".into()));
    }
    if pred.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} targets",
            pred.len(),
            y.len()
        )));
    }
    let mse = pred
        .iter()
        .zip(y.values())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Mean width of the intervals [mu - delta*sigma, mu + delta*sigma].
pub fn mpiw(pred: &ProbabilisticPrediction, spec: IntervalSpec) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty prediction".into()));
    }
    let mean_sigma = pred.sigmas().iter().sum::<f64>() / pred.len() as f64;
    Ok(2.0 * spec.delta_multiplier * mean_sigma)
}

/// Percentage of targets inside [mu - delta*sigma, mu + delta*sigma].
pub fn picp(pred: &ProbabilisticPrediction, y: &TargetVector, spec: IntervalSpec) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty prediction".into()));
    }
    if pred.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} targets",
            pred.len(),
            y.len()
        )));
    }
    let covered = pred
        .means()
        .iter()
        .zip(pred.sigmas())
        .zip(y.values())
        .filter(|((m, s), t)| (*t - *m).abs() <= spec.delta_multiplier * **s)
        .count();
    Ok(100.0 * covered as f64 / pred.len() as f64)
}

/// The nominal levels of the calibration sweep: 10% to 90% in steps of 10.
pub fn calibration_levels() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Two-sided standard-normal quantile for central coverage `level`.
pub fn central_quantile(level: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    normal.inverse_cdf((1.0 + level) / 2.0)
}

/// Observed coverage at each nominal Gaussian level.
pub fn calibration_curve(
    pred: &ProbabilisticPrediction,
    y: &TargetVector,
) -> Result<CalibrationCurve> {
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty prediction".into()));
    }
    if pred.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} targets",
            pred.len(),
            y.len()
        )));
    }
    let nominal_levels = calibration_levels();
    let observed_fractions = nominal_levels
        .iter()
        .map(|&level| {
            let z = central_quantile(level);
            let covered = pred
                .means()
                .iter()
                .zip(pred.sigmas())
                .zip(y.values())
                .filter(|((m, s), t)| (*t - *m).abs() <= z * **s)
                .count();
            covered as f64 / pred.len() as f64
        })
        .collect();
    Ok(CalibrationCurve {
        nominal_levels,
        observed_fractions,
    })
}

/// Gaussian differential entropy of each predictive distribution,
/// H = 0.5 ln(2 pi e sigma^2), with a 256-point Silverman KDE over the
/// per-sample entropies.
pub fn predictive_entropy(pred: &ProbabilisticPrediction) -> Result<EntropySummary> {
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty prediction".into()));
    }
    let half_ln_2pie = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    let per_sample: Vec<f64> = pred.sigmas().iter().map(|s| half_ln_2pie + s.ln()).collect();
    let mean_entropy = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let (kde_grid, kde_density) = kde::gaussian_kde(&per_sample, 256);
    Ok(EntropySummary {
        per_sample_entropies: per_sample,
        kde_grid,
        kde_density,
        mean_entropy,
    })
}

/// Mean and population standard deviation over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

/// One run's metrics for a single ensemble mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rmse: f64,
    pub modalities: BTreeMap<String, ModalityRun>,
    /// Mean predictive entropy per boosting stage, in stage order.
    pub stage_mean_entropies: Vec<StageEntropy>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalityRun {
    pub mpiw: f64,
    /// PICP at delta = 1, 2, 3 sigma.
    pub picp: Vec<f64>,
    pub calibration: CalibrationCurve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageEntropy {
    pub modality_id: String,
    pub mean_entropy: f64,
}

/// Aggregated metrics over folds/runs for one ensemble mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_runs: usize,
    pub mpiw_delta: f64,
    pub rmse: MeanStd,
    pub modalities: BTreeMap<String, ModalitySummary>,
    pub stage_entropy: Vec<StageEntropySummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalitySummary {
    pub mpiw: MeanStd,
    pub picp: Vec<MeanStd>,
    /// Observed calibration fraction per nominal level, aggregated over runs.
    pub calibration: Vec<MeanStd>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageEntropySummary {
    pub modality_id: String,
    pub mean_entropy: MeanStd,
}

/// Fieldwise mean and population standard deviation over per-run fragments.
pub fn aggregate_runs(runs: &[RunMetrics], mpiw_delta: f64) -> Result<MetricsReport> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InsufficientData("no runs to aggregate".into()))?;
    for r in runs {
        if r.modalities.len() != first.modalities.len()
            || r.modalities.keys().ne(first.modalities.keys())
            || r.stage_mean_entropies.len() != first.stage_mean_entropies.len()
        {
            return Err(Error::ShapeMismatch("inconsistent run fragments".into()));
        }
    }

    let rmse = mean_std(&runs.iter().map(|r| r.rmse).collect::<Vec<_>>());

    let mut modalities = BTreeMap::new();
    for id in first.modalities.keys() {
        let mpiw = mean_std(&runs.iter().map(|r| r.modalities[id].mpiw).collect::<Vec<_>>());
        let n_picp = first.modalities[id].picp.len();
        let picp = (0..n_picp)
            .map(|d| mean_std(&runs.iter().map(|r| r.modalities[id].picp[d]).collect::<Vec<_>>()))
            .collect();
        let n_levels = first.modalities[id].calibration.nominal_levels.len();
        let calibration = (0..n_levels)
            .map(|l| {
                mean_std(
                    &runs
                        .iter()
                        .map(|r| r.modalities[id].calibration.observed_fractions[l])
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        modalities.insert(id.clone(), ModalitySummary { mpiw, picp, calibration });
    }

    let stage_entropy = (0..first.stage_mean_entropies.len())
        .map(|s| StageEntropySummary {
            modality_id: first.stage_mean_entropies[s].modality_id.clone(),
            mean_entropy: mean_std(
                &runs.iter().map(|r| r.stage_mean_entropies[s].mean_entropy).collect::<Vec<_>>(),
            ),
        })
        .collect();

    Ok(MetricsReport {
        n_runs: runs.len(),
        mpiw_delta,
        rmse,
        modalities,
        stage_entropy,
    })
}
