//! Gaussian-head multilayer perceptron base learner trained by minimizing the
//! weighted negative log-likelihood with mini-batch Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core::{
    BaseLearner, ModalityMatrix, ProbabilisticPrediction, SampleWeightVector, TargetVector,
    SIGMA_FLOOR,
};
use crate::data::{train_val_split, StandardScaler};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stopping epochs without validation improvement; 0 disables the
    /// validation split entirely.
    pub patience: usize,
    pub weight_decay: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layer_sizes: vec![64, 32],
            learning_rate: 0.00125,
            batch_size: 32,
            max_epochs: 500,
            patience: 50,
            weight_decay: 1e-4,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layer_sizes.is_empty() || self.hidden_layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig("hidden_layer_sizes must be non-empty positives".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidConfig("val_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Weighted Gaussian negative log-likelihood with the additive constant
/// dropped: (1/N) sum_n w_n [ ln(sigma_n^2)/2 + (y_n - mu_n)^2 / (2 sigma_n^2) ].
pub fn gaussian_nll(
    mu: &[f64],
    sigma: &[f64],
    y: &TargetVector,
    w: &SampleWeightVector,
) -> Result<f64> {
    let n = mu.len();
    if sigma.len() != n || y.len() != n || w.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "nll inputs of lengths {}, {}, {}, {}",
            n,
            sigma.len(),
            y.len(),
            w.len()
        )));
    }
    if n == 0 {
        return Err(Error::InsufficientData("empty nll input".into()));
    }
    let mut total = 0.0;
    for i in 0..n {
        let s = sigma[i];
        if s < SIGMA_FLOOR {
            return Err(Error::DegenerateUncertainty(format!(
                "sigma {} at index {} below the floor",
                s, i
            )));
        }
        let r = y.values()[i] - mu[i];
        total += w.weights()[i] * ((s * s).ln() / 2.0 + r * r / (2.0 * s * s));
    }
    Ok(total / n as f64)
}

fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t
    } else if t < -30.0 {
        t.exp()
    } else {
        (1.0 + t.exp()).ln()
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Fully-connected tanh network with two affine output heads: one for the mean
/// and one for a pre-activation mapped to sigma via softplus plus the floor.
///
/// Parameters live in one flat vector so the analytic gradient can be checked
/// against finite differences parameter by parameter.
#[derive(Debug, Clone)]
pub struct GaussianNet {
    input_dim: usize,
    hidden: Vec<usize>,
    params: Vec<f64>,
    /// True for weight-matrix entries, false for biases (decay skips biases).
    is_weight: Vec<bool>,
}

impl GaussianNet {
    pub fn new(input_dim: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        assert!(!hidden.is_empty());
        let mut params = Vec::new();
        let mut is_weight = Vec::new();
        let mut fan_in = input_dim;
        for &out in hidden {
            let limit = (6.0 / (fan_in + out) as f64).sqrt();
            for _ in 0..out * fan_in {
                params.push(rng.gen_range(-limit..limit));
                is_weight.push(true);
            }
            for _ in 0..out {
                params.push(0.0);
                is_weight.push(false);
            }
            fan_in = out;
        }
        for _head in 0..2 {
            let limit = (6.0 / (fan_in + 1) as f64).sqrt();
            for _ in 0..fan_in {
                params.push(rng.gen_range(-limit..limit));
                is_weight.push(true);
            }
            params.push(0.0);
            is_weight.push(false);
        }
        Self {
            input_dim,
            hidden: hidden.to_vec(),
            params,
            is_weight,
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.params.len());
        self.params.copy_from_slice(p);
    }

    /// Forward pass for one (standardized) input row; returns (mu, sigma).
    pub fn forward(&self, x: &[f64]) -> (f64, f64) {
        let (mu, s_pre, _) = self.forward_cached(x);
        (mu, softplus(s_pre) + SIGMA_FLOOR)
    }

    /// Forward pass keeping the hidden activations (input first).
    fn forward_cached(&self, x: &[f64]) -> (f64, f64, Vec<Vec<f64>>) {
        debug_assert_eq!(x.len(), self.input_dim);
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.hidden.len() + 1);
        acts.push(x.to_vec());
        let mut offset = 0;
        let mut fan_in = self.input_dim;
        for &out in &self.hidden {
            let prev = acts.last().unwrap().clone();
            let mut a = Vec::with_capacity(out);
            for o in 0..out {
                let w = &self.params[offset + o * fan_in..offset + (o + 1) * fan_in];
                let b = self.params[offset + out * fan_in + o];
                let z: f64 = w.iter().zip(&prev).map(|(wi, ai)| wi * ai).sum::<f64>() + b;
                a.push(z.tanh());
            }
            offset += out * fan_in + out;
            fan_in = out;
            acts.push(a);
        }
        let last = acts.last().unwrap();
        let mu_w = &self.params[offset..offset + fan_in];
        let mu_b = self.params[offset + fan_in];
        let mu: f64 = mu_w.iter().zip(last).map(|(w, a)| w * a).sum::<f64>() + mu_b;
        offset += fan_in + 1;
        let s_w = &self.params[offset..offset + fan_in];
        let s_b = self.params[offset + fan_in];
        let s: f64 = s_w.iter().zip(last).map(|(w, a)| w * a).sum::<f64>() + s_b;
        (mu, s, acts)
    }

    /// Mean weighted NLL over the given samples plus its gradient with respect
    /// to every parameter. No weight decay here.
    pub fn loss_and_grad(&self, xs: &[&[f64]], y: &[f64], w: &[f64]) -> (f64, Vec<f64>) {
        assert!(!xs.is_empty() && xs.len() == y.len() && xs.len() == w.len());
        let n = xs.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;

        // Offsets of each hidden layer and the heads inside the flat vector.
        let mut offsets = Vec::with_capacity(self.hidden.len());
        let mut offset = 0;
        let mut fan_in = self.input_dim;
        for &out in &self.hidden {
            offsets.push((offset, fan_in, out));
            offset += out * fan_in + out;
            fan_in = out;
        }
        let mu_off = offset;
        let s_off = offset + fan_in + 1;

        for i in 0..xs.len() {
            let (mu, s_pre, acts) = self.forward_cached(xs[i]);
            let sigma = softplus(s_pre) + SIGMA_FLOOR;
            let r = y[i] - mu;
            loss += w[i] * ((sigma * sigma).ln() / 2.0 + r * r / (2.0 * sigma * sigma));

            let dmu = w[i] * (mu - y[i]) / (sigma * sigma) / n;
            let dsigma = w[i] * (1.0 / sigma - r * r / (sigma * sigma * sigma)) / n;
            let ds = dsigma * sigmoid(s_pre);

            let last = acts.last().unwrap();
            let width = last.len();
            let mut da: Vec<f64> = vec![0.0; width];
            for j in 0..width {
                grad[mu_off + j] += dmu * last[j];
                grad[s_off + j] += ds * last[j];
                da[j] = dmu * self.params[mu_off + j] + ds * self.params[s_off + j];
            }
            grad[mu_off + width] += dmu;
            grad[s_off + width] += ds;

            for (l, &(off, n_in, n_out)) in offsets.iter().enumerate().rev() {
                let a = &acts[l + 1];
                let prev = &acts[l];
                let mut da_prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let dz = da[o] * (1.0 - a[o] * a[o]);
                    let wrow = off + o * n_in;
                    for j in 0..n_in {
                        grad[wrow + j] += dz * prev[j];
                        da_prev[j] += dz * self.params[wrow + j];
                    }
                    grad[off + n_out * n_in + o] += dz;
                }
                da = da_prev;
            }
        }
        (loss / n, grad)
    }
}

/// Bookkeeping from a completed fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitInfo {
    pub epochs_run: usize,
    pub train_nll: f64,
    pub val_nll: Option<f64>,
}

struct FittedMlp {
    net: GaussianNet,
    scaler: StandardScaler,
    n_features: usize,
    info: FitInfo,
}

pub struct MlpLearner {
    cfg: MlpConfig,
    fitted: Option<FittedMlp>,
}

impl MlpLearner {
    pub fn new(cfg: MlpConfig) -> Self {
        Self { cfg, fitted: None }
    }

    pub fn fit_info(&self) -> Option<&FitInfo> {
        self.fitted.as_ref().map(|f| &f.info)
    }
}

impl BaseLearner for MlpLearner {
    fn fit(&mut self, x: &ModalityMatrix, y: &TargetVector, w: &SampleWeightVector) -> Result<()> {
        self.cfg.validate()?;
        let n = x.n_rows();
        if n == 0 {
            return Err(Error::InsufficientData("cannot fit on an empty matrix".into()));
        }
        if y.len() != n || w.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} rows vs {} targets vs {} weights",
                n,
                y.len(),
                w.len()
            )));
        }

        let scaler = StandardScaler::fit(x)?;
        let xs: Vec<Vec<f64>> = x.rows().map(|r| scaler.transform_row(r)).collect();

        let use_val = self.cfg.patience > 0 && n >= 10;
        let (train_idx, val_idx) = if use_val {
            train_val_split(n, self.cfg.val_fraction, self.cfg.seed)?
        } else {
            ((0..n).collect(), Vec::new())
        };

        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut net = GaussianNet::new(x.n_cols(), &self.cfg.hidden_layer_sizes, &mut rng);

        let p = net.n_params();
        let mut m = vec![0.0; p];
        let mut v = vec![0.0; p];
        let mut t = 0usize;
        let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);

        let val_nll_of = |net: &GaussianNet| -> f64 {
            let mut total = 0.0;
            for &i in &val_idx {
                let (mu, sigma) = net.forward(&xs[i]);
                let r = y.values()[i] - mu;
                total += w.weights()[i]
                    * ((sigma * sigma).ln() / 2.0 + r * r / (2.0 * sigma * sigma));
            }
            total / val_idx.len().max(1) as f64
        };

        let mut best_params: Option<Vec<f64>> = None;
        let mut best_val = f64::INFINITY;
        let mut epochs_without_improvement = 0usize;
        let mut epochs_run = 0usize;
        let mut shuffled = train_idx.clone();

        for epoch in 0..self.cfg.max_epochs {
            epochs_run = epoch + 1;
            shuffled.shuffle(&mut rng);
            for batch in shuffled.chunks(self.cfg.batch_size) {
                let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
                let by: Vec<f64> = batch.iter().map(|&i| y.values()[i]).collect();
                let bw: Vec<f64> = batch.iter().map(|&i| w.weights()[i]).collect();
                let (loss, mut grad) = net.loss_and_grad(&bx, &by, &bw);
                if !loss.is_finite() {
                    return Err(Error::DivergedTraining { epoch });
                }
                if self.cfg.weight_decay > 0.0 {
                    for j in 0..p {
                        if net.is_weight[j] {
                            grad[j] += self.cfg.weight_decay * net.params[j];
                        }
                    }
                }
                t += 1;
                let bc1 = 1.0 - beta1.powi(t as i32);
                let bc2 = 1.0 - beta2.powi(t as i32);
                for j in 0..p {
                    m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
                    v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
                    let step =
                        self.cfg.learning_rate * (m[j] / bc1) / ((v[j] / bc2).sqrt() + eps);
                    net.params[j] -= step;
                }
            }
            if use_val {
                let val = val_nll_of(&net);
                if !val.is_finite() {
                    return Err(Error::DivergedTraining { epoch });
                }
                if val < best_val - 1e-12 {
                    best_val = val;
                    best_params = Some(net.params.clone());
                    epochs_without_improvement = 0;
                } else {
                    epochs_without_improvement += 1;
                    if epochs_without_improvement > self.cfg.patience {
                        break;
                    }
                }
            }
        }
        if let Some(best) = best_params {
            net.params = best;
        }

        let mut train_total = 0.0;
        for i in 0..n {
            let (mu, sigma) = net.forward(&xs[i]);
            let r = y.values()[i] - mu;
            train_total +=
                w.weights()[i] * ((sigma * sigma).ln() / 2.0 + r * r / (2.0 * sigma * sigma));
        }
        let info = FitInfo {
            epochs_run,
            train_nll: train_total / n as f64,
            val_nll: if use_val { Some(best_val) } else { None },
        };

        self.fitted = Some(FittedMlp {
            net,
            scaler,
            n_features: x.n_cols(),
            info,
        });
        Ok(())
    }

    fn predict(&self, x: &ModalityMatrix) -> Result<ProbabilisticPrediction> {
        let fitted = self.fitted.as_ref().ok_or(Error::NotFitted)?;
        if x.n_cols() != fitted.n_features {
            return Err(Error::ShapeMismatch(format!(
                "{} features, learner trained with {}",
                x.n_cols(),
                fitted.n_features
            )));
        }
        let mut means = Vec::with_capacity(x.n_rows());
        let mut sigmas = Vec::with_capacity(x.n_rows());
        for row in x.rows() {
            let (mu, sigma) = fitted.net.forward(&fitted.scaler.transform_row(row));
            means.push(mu);
            sigmas.push(sigma);
        }
        ProbabilisticPrediction::new(means, sigmas)
    }
}
