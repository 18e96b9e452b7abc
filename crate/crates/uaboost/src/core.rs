//! Shared domain types, the base-learner abstraction, weight normalization,
//! and the two fusion rules (plain average and inverse-uncertainty weighting).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on every predictive standard deviation, in standardized-target
/// units. Keeps the inverse-uncertainty fusion and the Gaussian NLL away from
/// division/log blow-ups.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Lower bound applied to per-sample loss weights before normalization, so a
/// sample the previous learner is perfectly certain about still contributes.
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// Dense per-modality feature matrix, N rows by d columns.
#[derive(Debug, Clone)]
pub struct ModalityMatrix {
    modality_id: String,
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    feature_names: Vec<String>,
}

impl ModalityMatrix {
    pub fn from_rows(
        modality_id: impl Into<String>,
        rows: Vec<Vec<f64>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n_cols = feature_names.len();
        if n_cols == 0 {
            return Err(Error::ShapeMismatch("matrix needs at least one feature".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {} has {} columns, expected {}",
                    i,
                    row.len(),
                    n_cols
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::ShapeMismatch(format!(
                        "non-finite value {} in row {}",
                        v, i
                    )));
                }
                values.push(v);
            }
        }
        Ok(Self {
            modality_id: modality_id.into(),
            n_rows: rows.len(),
            n_cols,
            values,
            feature_names,
        })
    }

    pub fn modality_id(&self) -> &str {
        &self.modality_id
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols)
    }

    /// Row-subset copy preserving the order of `indices`.
    pub fn subset(&self, indices: &[usize]) -> ModalityMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        ModalityMatrix {
            modality_id: self.modality_id.clone(),
            values,
            n_rows: indices.len(),
            n_cols: self.n_cols,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Regression labels, row-aligned with every modality matrix they are paired with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetVector(Vec<f64>);

impl TargetVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::ShapeMismatch(format!(
                    "non-finite target {} at index {}",
                    v, i
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn subset(&self, indices: &[usize]) -> TargetVector {
        TargetVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

/// Per-sample (mean, standard deviation) pairs from one base learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilisticPrediction {
    means: Vec<f64>,
    sigmas: Vec<f64>,
}

impl ProbabilisticPrediction {
    pub fn new(means: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        if means.len() != sigmas.len() {
            return Err(Error::ShapeMismatch(format!(
                "means has {} entries, sigmas has {}",
                means.len(),
                sigmas.len()
            )));
        }
        for (i, &m) in means.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::ShapeMismatch(format!(
                    "non-finite mean {} at index {}",
                    m, i
                )));
            }
        }
        for (i, &s) in sigmas.iter().enumerate() {
            if !s.is_finite() || s < SIGMA_FLOOR {
                return Err(Error::DegenerateUncertainty(format!(
                    "sigma {} at index {} is below the floor {}",
                    s, i, SIGMA_FLOOR
                )));
            }
        }
        Ok(Self { means, sigmas })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }
}

/// Nonnegative per-sample loss weights, normalized to mean 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeightVector(Vec<f64>);

impl SampleWeightVector {
    /// Uniform weights (the stage-1 case).
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn subset(&self, indices: &[usize]) -> SampleWeightVector {
        SampleWeightVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

/// Floors each raw weight at [`WEIGHT_FLOOR`], then rescales so the arithmetic
/// mean is 1. Rescaling can push floored entries back below the floor, so
/// floor-and-rescale is iterated to a fixed point; this makes the operation
/// idempotent and keeps every output weight at or above the floor.
pub fn normalize_weights(raw: &[f64]) -> Result<SampleWeightVector> {
    if raw.is_empty() {
        return Err(Error::InvalidWeight("empty weight vector".into()));
    }
    for (i, &r) in raw.iter().enumerate() {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidWeight(format!(
                "weight {} at index {} must be finite and nonnegative",
                r, i
            )));
        }
    }
    let n = raw.len() as f64;
    let mut w: Vec<f64> = raw.iter().map(|&r| r.max(WEIGHT_FLOOR)).collect();
    for _ in 0..64 {
        let mean = w.iter().sum::<f64>() / n;
        for v in w.iter_mut() {
            *v = (*v / mean).max(WEIGHT_FLOOR);
        }
        if (mean - 1.0).abs() <= 1e-15 {
            break;
        }
    }
    Ok(SampleWeightVector(w))
}

/// Plain average of the per-learner predicted means.
pub fn fuse_mean(preds: &[ProbabilisticPrediction]) -> Result<Vec<f64>> {
    let n = check_fusion_shapes(preds)?;
    let k = preds.len() as f64;
    let mut out = vec![0.0; n];
    for p in preds {
        for (o, &m) in out.iter_mut().zip(p.means()) {
            *o += m;
        }
    }
    for o in out.iter_mut() {
        *o /= k;
    }
    Ok(out)
}

/// Inverse-uncertainty weighted average of the per-learner predicted means:
/// out[n] = sum_j (1/sigma_j[n]) mu_j[n] / sum_j (1/sigma_j[n]).
pub fn fuse_inverse_uncertainty(preds: &[ProbabilisticPrediction]) -> Result<Vec<f64>> {
    let n = check_fusion_shapes(preds)?;
    for p in preds {
        for (i, &s) in p.sigmas().iter().enumerate() {
            if s < SIGMA_FLOOR {
                return Err(Error::DegenerateUncertainty(format!(
                    "sigma {} at index {} is below the floor",
                    s, i
                )));
            }
        }
    }
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for p in preds {
        for i in 0..n {
            let inv = 1.0 / p.sigmas()[i];
            num[i] += inv * p.means()[i];
            den[i] += inv;
        }
    }
    Ok(num.iter().zip(&den).map(|(a, b)| a / b).collect())
}

fn check_fusion_shapes(preds: &[ProbabilisticPrediction]) -> Result<usize> {
    let first = preds
        .first()
        .ok_or_else(|| Error::InsufficientData("no predictions to fuse".into()))?;
    let n = first.len();
    for (j, p) in preds.iter().enumerate() {
        if p.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "prediction {} has {} samples, expected {}",
                j,
                p.len(),
                n
            )));
        }
    }
    Ok(n)
}

/// The three ensemble variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleMode {
    Vanilla,
    Ua,
    UaWeighted,
}

impl EnsembleMode {
    pub const ALL: [EnsembleMode; 3] =
        [EnsembleMode::Vanilla, EnsembleMode::Ua, EnsembleMode::UaWeighted];

    pub fn as_str(&self) -> &'static str {
        match self {
            EnsembleMode::Vanilla => "vanilla",
            EnsembleMode::Ua => "ua",
            EnsembleMode::UaWeighted => "ua-weighted",
        }
    }
}

impl std::fmt::Display for EnsembleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(EnsembleMode::Vanilla),
            "ua" => Ok(EnsembleMode::Ua),
            "ua-weighted" => Ok(EnsembleMode::UaWeighted),
            other => Err(Error::InvalidConfig(format!(
                "unknown ensemble mode '{}', expected vanilla | ua | ua-weighted",
                other
            ))),
        }
    }
}

/// Behavioral contract for a per-modality probabilistic regressor.
///
/// A learner is immutable after `fit`; `predict` before `fit` is an error.
pub trait BaseLearner: Send + Sync {
    fn fit(&mut self, x: &ModalityMatrix, y: &TargetVector, w: &SampleWeightVector) -> Result<()>;

    fn predict(&self, x: &ModalityMatrix) -> Result<ProbabilisticPrediction>;

    /// Point predictions only. Learners with expensive uncertainty estimates
    /// override this with a cheaper path.
    fn predict_point(&self, x: &ModalityMatrix) -> Result<Vec<f64>> {
        Ok(self.predict(x)?.means().to_vec())
    }
}
