//! Sequential boosting across modality-wise base learners in the three
//! ensembling modes.

use std::collections::BTreeMap;

use crate::core::{
    fuse_inverse_uncertainty, fuse_mean, normalize_weights, BaseLearner, EnsembleMode,
    ModalityMatrix, ProbabilisticPrediction, SampleWeightVector, TargetVector,
};
use crate::error::{Error, Result};

/// A fitted boosting chain: one learner per modality, in boosting order.
pub struct BoostChain {
    mode: EnsembleMode,
    stages: Vec<(String, Box<dyn BaseLearner>)>,
    order_scores: Vec<(String, f64)>,
}

impl BoostChain {
    pub fn mode(&self) -> EnsembleMode {
        self.mode
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage_ids(&self) -> Vec<&str> {
        self.stages.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn stage_learner(&self, j: usize) -> &dyn BaseLearner {
        self.stages[j].1.as_ref()
    }

    /// Individual evaluation scores that fixed the boosting order.
    pub fn order_scores(&self) -> &[(String, f64)] {
        &self.order_scores
    }

    /// Reinterprets the same fitted chain under a different fusion mode.
    /// Valid only between modes whose fitted stages coincide (UA and
    /// UA-weighted share identical chains).
    pub fn with_mode(mut self, mode: EnsembleMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Per-stage artifacts kept for entropy analysis: the training-set prediction
/// and, for every stage except the last, the weights it produced for the
/// next stage.
pub struct StageRecord {
    pub modality_id: String,
    pub train_prediction: ProbabilisticPrediction,
    pub raw_weights: Option<Vec<f64>>,
    pub normalized_weights: Option<SampleWeightVector>,
}

pub struct StageTrace {
    pub stages: Vec<StageRecord>,
}

/// Orders modalities best individual RMSE first; ties break lexicographically
/// on modality id.
pub fn rank_modalities(individual_scores: &BTreeMap<String, f64>) -> Result<Vec<(String, f64)>> {
    if individual_scores.is_empty() {
        return Err(Error::InsufficientData("no modality scores to rank".into()));
    }
    for (id, &s) in individual_scores {
        if !s.is_finite() {
            return Err(Error::InvalidScore(format!("modality {} has score {}", id, s)));
        }
    }
    let mut out: Vec<(String, f64)> =
        individual_scores.iter().map(|(id, &s)| (id.clone(), s)).collect();
    // BTreeMap iteration is already lexicographic, so a stable sort on the
    // score alone preserves the tie-break.
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    Ok(out)
}

/// Weights for the next boosting stage: squared residuals in vanilla mode,
/// predicted sigmas in the uncertainty-aware modes, then normalized to mean
/// one.
pub fn derive_weights(
    mode: EnsembleMode,
    train_pred: &ProbabilisticPrediction,
    y: &TargetVector,
) -> Result<SampleWeightVector> {
    Ok(derive_weights_raw(mode, train_pred, y)?.1)
}

/// Same as [`derive_weights`] but also returns the raw (pre-normalization)
/// weights for tracing.
pub fn derive_weights_raw(
    mode: EnsembleMode,
    train_pred: &ProbabilisticPrediction,
    y: &TargetVector,
) -> Result<(Vec<f64>, SampleWeightVector)> {
    if train_pred.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} targets",
            train_pred.len(),
            y.len()
        )));
    }
    let raw: Vec<f64> = match mode {
        EnsembleMode::Vanilla => train_pred
            .means()
            .iter()
            .zip(y.values())
            .map(|(&mu, &t)| (t - mu) * (t - mu))
            .collect(),
        EnsembleMode::Ua | EnsembleMode::UaWeighted => train_pred.sigmas().to_vec(),
    };
    let normalized = normalize_weights(&raw)?;
    Ok((raw, normalized))
}

fn check_datasets(
    datasets: &BTreeMap<String, ModalityMatrix>,
    y: &TargetVector,
    order: &[(String, f64)],
) -> Result<()> {
    if order.is_empty() {
        return Err(Error::InsufficientData("empty boosting order".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (id, _) in order {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidConfig(format!("modality {} repeated in order", id)));
        }
        let x = datasets
            .get(id)
            .ok_or_else(|| Error::MissingModality(id.clone()))?;
        if x.n_rows() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "modality {} has {} rows, targets have {}",
                id,
                x.n_rows(),
                y.len()
            )));
        }
    }
    if seen.len() != datasets.len() {
        let extra: Vec<&str> = datasets
            .keys()
            .map(String::as_str)
            .filter(|k| !seen.contains(k))
            .collect();
        return Err(Error::InvalidConfig(format!(
            "order omits modalities: {}",
            extra.join(", ")
        )));
    }
    Ok(())
}

/// Fits the boosting chain in the given order. Stage 1 trains with uniform
/// weights; each later stage trains with weights derived from the previous
/// stage's in-sample training predictions.
pub fn boost_fit(
    mode: EnsembleMode,
    datasets: &BTreeMap<String, ModalityMatrix>,
    y: &TargetVector,
    learner_factory: &mut dyn FnMut(&str, usize) -> Box<dyn BaseLearner>,
    order: &[(String, f64)],
) -> Result<(BoostChain, StageTrace)> {
    check_datasets(datasets, y, order)?;

    let k = order.len();
    let mut stages: Vec<(String, Box<dyn BaseLearner>)> = Vec::with_capacity(k);
    let mut trace: Vec<StageRecord> = Vec::with_capacity(k);
    let mut weights = SampleWeightVector::uniform(y.len());

    for (j, (id, _)) in order.iter().enumerate() {
        let x = &datasets[id];
        let mut learner = learner_factory(id, j);
        let stage_err = |source: Error| Error::StageFailure {
            stage: j + 1,
            modality: id.clone(),
            source: Box::new(source),
        };
        learner.fit(x, y, &weights).map_err(stage_err)?;
        let train_prediction = learner.predict(x).map_err(stage_err)?;

        let (raw_weights, normalized_weights) = if j + 1 < k {
            let (raw, normalized) =
                derive_weights_raw(mode, &train_prediction, y).map_err(stage_err)?;
            weights = normalized.clone();
            (Some(raw), Some(normalized))
        } else {
            (None, None)
        };

        trace.push(StageRecord {
            modality_id: id.clone(),
            train_prediction,
            raw_weights,
            normalized_weights,
        });
        stages.push((id.clone(), learner));
    }

    Ok((
        BoostChain { mode, stages, order_scores: order.to_vec() },
        StageTrace { stages: trace },
    ))
}

/// Per-modality predictions from every stage plus the mode's fused point
/// prediction.
pub fn predict(
    chain: &BoostChain,
    datasets: &BTreeMap<String, ModalityMatrix>,
) -> Result<(Vec<f64>, BTreeMap<String, ProbabilisticPrediction>)> {
    let mut preds_in_order: Vec<ProbabilisticPrediction> = Vec::with_capacity(chain.n_stages());
    let mut per_modality = BTreeMap::new();
    for (id, learner) in &chain.stages {
        let x = datasets
            .get(id)
            .ok_or_else(|| Error::MissingModality(id.clone()))?;
        let p = learner.predict(x)?;
        preds_in_order.push(p.clone());
        per_modality.insert(id.clone(), p);
    }
    let fused = match chain.mode {
        EnsembleMode::Vanilla | EnsembleMode::Ua => fuse_mean(&preds_in_order)?,
        EnsembleMode::UaWeighted => fuse_inverse_uncertainty(&preds_in_order)?,
    };
    Ok((fused, per_modality))
}
