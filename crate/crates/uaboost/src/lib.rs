//! Uncertainty-aware boosted ensembling for multi-modal regression.
//!
//! Base learners (a Gaussian-head MLP and a random forest with
//! infinitesimal-jackknife variance) are trained sequentially across
//! modalities; each stage reweights the training loss of the next using
//! either squared residuals (vanilla) or predicted uncertainties (UA).
//! Predictions are fused by plain or inverse-uncertainty-weighted averaging.

pub mod core;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod kde;
pub mod metrics;
pub mod mlp;
pub mod seeding;

pub use crate::core::{
    fuse_inverse_uncertainty, fuse_mean, normalize_weights, BaseLearner, EnsembleMode,
    ModalityMatrix, ProbabilisticPrediction, SampleWeightVector, TargetVector, SIGMA_FLOOR,
    WEIGHT_FLOOR,
};
pub use crate::error::{Error, Result};
