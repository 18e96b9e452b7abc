//! Weighted random-forest regression base learner with predictive uncertainty
//! from the bias-corrected infinitesimal jackknife.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{
    BaseLearner, ModalityMatrix, ProbabilisticPrediction, SampleWeightVector, TargetVector,
    SIGMA_FLOOR,
};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum MaxFeatures {
    /// Consider floor(fraction * d) features per split, at least one.
    Fraction(f64),
    All,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 300,
            min_samples_leaf: 5,
            max_depth: None,
            max_features: MaxFeatures::Fraction(1.0 / 3.0),
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 2 {
            return Err(Error::InvalidConfig(
                "n_trees must be at least 2 for the covariance over trees".into(),
            ));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("min_samples_leaf must be at least 1".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "max_features fraction {} must be in (0, 1]",
                    f
                )));
            }
        }
        Ok(())
    }

    fn mtry(&self, d: usize) -> usize {
        match self.max_features {
            MaxFeatures::All => d,
            MaxFeatures::Fraction(f) => ((f * d as f64).floor() as usize).clamp(1, d),
        }
    }
}

/// How many times each training sample appears in each tree's bootstrap
/// resample; every row sums to N.
#[derive(Debug, Clone)]
pub struct BootstrapRecord {
    counts: Vec<u32>,
    n_trees: usize,
    n_samples: usize,
}

impl BootstrapRecord {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let n_trees = rows.len();
        let n_samples = rows.first().map_or(0, |r| r.len());
        let mut counts = Vec::with_capacity(n_trees * n_samples);
        for (b, row) in rows.iter().enumerate() {
            if row.len() != n_samples {
                return Err(Error::ShapeMismatch(format!("bootstrap row {} length mismatch", b)));
            }
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total != n_samples as u64 {
                return Err(Error::InvalidConfig(format!(
                    "bootstrap row {} sums to {}, expected {}",
                    b, total, n_samples
                )));
            }
            counts.extend_from_slice(row);
        }
        Ok(Self { counts, n_trees, n_samples })
    }

    pub fn n_trees(&self) -> usize {
        self.n_trees
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Counts for tree `b`, one entry per training sample.
    pub fn row(&self, b: usize) -> &[u32] {
        &self.counts[b * self.n_samples..(b + 1) * self.n_samples]
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

struct TreeBuilder<'a> {
    x: &'a ModalityMatrix,
    y: &'a [f64],
    /// Effective split weight per training sample: bootstrap count times
    /// boosting weight.
    eff_w: &'a [f64],
    /// Bootstrap counts (the "weight-count" used for leaf-size limits).
    cnt: &'a [u32],
    cfg: &'a ForestConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn build(mut self, indices: Vec<u32>) -> Tree {
        self.nodes.push(Node::Leaf(0.0));
        self.grow(indices, 0, 0);
        Tree { nodes: self.nodes }
    }

    fn grow(&mut self, indices: Vec<u32>, node: usize, depth: usize) {
        let mut sw = 0.0;
        let mut swy = 0.0;
        let mut swyy = 0.0;
        let mut cnt_sum: u64 = 0;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for &i in &indices {
            let i = i as usize;
            let (w, yv) = (self.eff_w[i], self.y[i]);
            sw += w;
            swy += w * yv;
            swyy += w * yv * yv;
            cnt_sum += self.cnt[i] as u64;
            y_min = y_min.min(yv);
            y_max = y_max.max(yv);
        }
        let leaf_value = if sw > 0.0 { swy / sw } else { 0.0 };
        self.nodes[node] = Node::Leaf(leaf_value);

        let depth_ok = self.cfg.max_depth.map_or(true, |d| depth < d);
        if !depth_ok
            || cnt_sum < 2 * self.cfg.min_samples_leaf as u64
            || (y_max - y_min) < 1e-12
        {
            return;
        }

        let d = self.x.n_cols();
        let mtry = self.cfg.mtry(d);
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(&mut self.rng);
        features.truncate(mtry);

        let parent_sse = swyy - swy * swy / sw;
        let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)

        // Sorted by (value, y, weight) so aggregates at tie-group boundaries
        // are invariant to the input sample order.
        let mut sorted: Vec<(f64, f64, f64, u32)> = Vec::with_capacity(indices.len());
        for &f in &features {
            sorted.clear();
            for &i in &indices {
                let i = i as usize;
                sorted.push((self.x.row(i)[f], self.y[i], self.eff_w[i], self.cnt[i]));
            }
            sorted.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then(a.1.partial_cmp(&b.1).unwrap())
                    .then(a.2.partial_cmp(&b.2).unwrap())
            });

            let mut lw = 0.0;
            let mut lwy = 0.0;
            let mut lwyy = 0.0;
            let mut lcnt: u64 = 0;
            for k in 0..sorted.len() - 1 {
                let (v, yv, w, c) = sorted[k];
                lw += w;
                lwy += w * yv;
                lwyy += w * yv * yv;
                lcnt += c as u64;
                let next_v = sorted[k + 1].0;
                if next_v <= v {
                    continue;
                }
                let rcnt = cnt_sum - lcnt;
                if lcnt < self.cfg.min_samples_leaf as u64
                    || rcnt < self.cfg.min_samples_leaf as u64
                {
                    continue;
                }
                let rw = sw - lw;
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                let left_sse = lwyy - lwy * lwy / lw;
                let right_sse = (swyy - lwyy) - (swy - lwy) * (swy - lwy) / rw;
                let gain = parent_sse - left_sse - right_sse;
                if gain > best.map_or(1e-12, |b| b.0) {
                    best = Some((gain, f, (v + next_v) / 2.0));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return;
        };

        let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = indices
            .into_iter()
            .partition(|&i| self.x.row(i as usize)[feature] <= threshold);
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let right = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        self.nodes[node] = Node::Split { feature, threshold, left, right };
        self.grow(left_idx, left, depth + 1);
        self.grow(right_idx, right, depth + 1);
    }
}

struct FittedForest {
    trees: Vec<Tree>,
    record: BootstrapRecord,
    /// Centered bootstrap counts, sample-major: centered[i * B + b].
    centered: Vec<f64>,
    n_features: usize,
}

pub struct ForestLearner {
    cfg: ForestConfig,
    fitted: Option<FittedForest>,
}

impl ForestLearner {
    pub fn new(cfg: ForestConfig) -> Self {
        Self { cfg, fitted: None }
    }

    pub fn config(&self) -> &ForestConfig {
        &self.cfg
    }

    /// Fits with explicitly supplied bootstrap counts instead of drawing them
    /// from the seed. Intended for oracle and invariance tests.
    pub fn fit_with_bootstrap(
        &mut self,
        x: &ModalityMatrix,
        y: &TargetVector,
        w: &SampleWeightVector,
        record: BootstrapRecord,
    ) -> Result<()> {
        self.cfg.validate()?;
        let n = x.n_rows();
        if record.n_trees() != self.cfg.n_trees || record.n_samples() != n {
            return Err(Error::ShapeMismatch(format!(
                "bootstrap record is {}x{}, expected {}x{}",
                record.n_trees(),
                record.n_samples(),
                self.cfg.n_trees,
                n
            )));
        }
        self.fit_common(x, y, w, record)
    }

    fn fit_common(
        &mut self,
        x: &ModalityMatrix,
        y: &TargetVector,
        w: &SampleWeightVector,
        record: BootstrapRecord,
    ) -> Result<()> {
        let n = x.n_rows();
        if n < 2 {
            return Err(Error::InsufficientData(format!("{} samples, need at least 2", n)));
        }
        if y.len() != n || w.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} rows vs {} targets vs {} weights",
                n,
                y.len(),
                w.len()
            )));
        }
        let b_total = self.cfg.n_trees;

        let trees: Vec<Tree> = (0..b_total)
            .into_par_iter()
            .map(|b| {
                let counts = record.row(b);
                let eff_w: Vec<f64> = (0..n)
                    .map(|i| counts[i] as f64 * w.weights()[i])
                    .collect();
                let indices: Vec<u32> =
                    (0..n as u32).filter(|&i| counts[i as usize] > 0).collect();
                let builder = TreeBuilder {
                    x,
                    y: y.values(),
                    eff_w: &eff_w,
                    cnt: counts,
                    cfg: &self.cfg,
                    rng: ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, b as u64 + 1)),
                    nodes: Vec::new(),
                };
                builder.build(indices)
            })
            .collect();

        // Center bootstrap counts per sample for the jackknife covariances.
        let mut centered = vec![0.0; n * b_total];
        for i in 0..n {
            let mut mean = 0.0;
            for b in 0..b_total {
                mean += record.row(b)[i] as f64;
            }
            mean /= b_total as f64;
            for b in 0..b_total {
                centered[i * b_total + b] = record.row(b)[i] as f64 - mean;
            }
        }

        self.fitted = Some(FittedForest {
            trees,
            record,
            centered,
            n_features: x.n_cols(),
        });
        Ok(())
    }

    fn fitted(&self) -> Result<&FittedForest> {
        self.fitted.as_ref().ok_or(Error::NotFitted)
    }

    fn check_features(&self, x: &ModalityMatrix) -> Result<&FittedForest> {
        let f = self.fitted()?;
        if x.n_cols() != f.n_features {
            return Err(Error::ShapeMismatch(format!(
                "{} features, forest trained with {}",
                x.n_cols(),
                f.n_features
            )));
        }
        Ok(f)
    }

    /// Arithmetic mean over the per-tree outputs.
    pub fn predict_mean(&self, x: &ModalityMatrix) -> Result<Vec<f64>> {
        let f = self.check_features(x)?;
        Ok(x.rows()
            .map(|row| {
                f.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / f.trees.len() as f64
            })
            .collect())
    }

    /// Per-tree outputs at one query row.
    pub fn tree_outputs(&self, row: &[f64]) -> Result<Vec<f64>> {
        let f = self.fitted()?;
        if row.len() != f.n_features {
            return Err(Error::ShapeMismatch(format!(
                "{} features, forest trained with {}",
                row.len(),
                f.n_features
            )));
        }
        Ok(f.trees.iter().map(|t| t.predict_row(row)).collect())
    }

    pub fn bootstrap_record(&self) -> Result<&BootstrapRecord> {
        Ok(&self.fitted()?.record)
    }

    fn ij_variance_from_outputs(f: &FittedForest, t: &[f64]) -> f64 {
        let b = t.len();
        let n = f.record.n_samples();
        let t_bar = t.iter().sum::<f64>() / b as f64;
        let t_centered: Vec<f64> = t.iter().map(|v| v - t_bar).collect();

        let mut v_hat = 0.0;
        for i in 0..n {
            let row = &f.centered[i * b..(i + 1) * b];
            let dot: f64 = row.iter().zip(&t_centered).map(|(c, tc)| c * tc).sum();
            let cov = dot / b as f64;
            v_hat += cov * cov;
        }
        let spread: f64 = t_centered.iter().map(|v| v * v).sum();
        let corrected = v_hat - (n as f64 / (b as f64 * b as f64)) * spread;
        corrected.max(0.0)
    }

    /// Bias-corrected infinitesimal-jackknife variance estimate at one query
    /// row, floored at zero.
    pub fn ij_variance(&self, row: &[f64]) -> Result<f64> {
        let t = self.tree_outputs(row)?;
        Ok(Self::ij_variance_from_outputs(self.fitted()?, &t))
    }
}

impl BaseLearner for ForestLearner {
    fn fit(&mut self, x: &ModalityMatrix, y: &TargetVector, w: &SampleWeightVector) -> Result<()> {
        self.cfg.validate()?;
        let n = x.n_rows();
        if n < 2 {
            return Err(Error::InsufficientData(format!("{} samples, need at least 2", n)));
        }
        let rows: Vec<Vec<u32>> = (0..self.cfg.n_trees)
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, b as u64 + 1));
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.gen_range(0..n)] += 1;
                }
                counts
            })
            .collect();
        self.fit_common(x, y, w, BootstrapRecord::new(rows)?)
    }

    fn predict(&self, x: &ModalityMatrix) -> Result<ProbabilisticPrediction> {
        let f = self.check_features(x)?;
        let rows: Vec<&[f64]> = x.rows().collect();
        let pairs: Vec<(f64, f64)> = rows
            .par_iter()
            .map(|row| {
                let t: Vec<f64> = f.trees.iter().map(|tr| tr.predict_row(row)).collect();
                let mean = t.iter().sum::<f64>() / t.len() as f64;
                let var = Self::ij_variance_from_outputs(f, &t);
                (mean, var.sqrt() + SIGMA_FLOOR)
            })
            .collect();
        let (means, sigmas) = pairs.into_iter().unzip();
        ProbabilisticPrediction::new(means, sigmas)
    }

    fn predict_point(&self, x: &ModalityMatrix) -> Result<Vec<f64>> {
        self.predict_mean(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix(rows: Vec<Vec<f64>>) -> ModalityMatrix {
        let d = rows[0].len();
        let names = (0..d).map(|j| format!("f{}", j)).collect();
        ModalityMatrix::from_rows("t", rows, names).unwrap()
    }

    fn small_cfg(n_trees: usize, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees,
            min_samples_leaf: 2,
            seed,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn constant_targets_give_constant_predictions_and_zero_variance() {
        let x = matrix((0..30).map(|i| vec![i as f64]).collect());
        let y = TargetVector::new(vec![7.0; 30]).unwrap();
        let mut forest = ForestLearner::new(small_cfg(20, 1));
        forest.fit(&x, &y, &SampleWeightVector::uniform(30)).unwrap();
        let pred = forest.predict(&x).unwrap();
        for (&m, &s) in pred.means().iter().zip(pred.sigmas()) {
            assert_abs_diff_eq!(m, 7.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s, SIGMA_FLOOR, epsilon = 1e-15);
        }
    }

    #[test]
    fn deep_trees_fit_a_step_function() {
        let n = 200;
        let x = matrix((0..n).map(|i| vec![(i as f64) / n as f64 - 0.5]).collect());
        let y = TargetVector::new(
            (0..n).map(|i| if (i as f64) / n as f64 - 0.5 > 0.0 { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap();
        let mut forest = ForestLearner::new(ForestConfig {
            n_trees: 50,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            seed: 3,
            ..ForestConfig::default()
        });
        forest.fit(&x, &y, &SampleWeightVector::uniform(n)).unwrap();
        let pred = forest.predict_mean(&x).unwrap();
        let rmse = crate::metrics::rmse(&pred, &y).unwrap();
        assert!(rmse < 0.1, "train rmse {}", rmse);
    }

    #[test]
    fn forest_mean_lies_within_tree_range() {
        let x = matrix((0..60).map(|i| vec![(i % 13) as f64, (i % 7) as f64]).collect());
        let y = TargetVector::new((0..60).map(|i| ((i * 31) % 17) as f64).collect()).unwrap();
        let mut forest = ForestLearner::new(small_cfg(25, 9));
        forest.fit(&x, &y, &SampleWeightVector::uniform(60)).unwrap();
        for i in 0..10 {
            let row = x.row(i).to_vec();
            let t = forest.tree_outputs(&row).unwrap();
            let mean = forest.predict_mean(&x.subset(&[i])).unwrap()[0];
            let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(mean >= lo - 1e-12 && mean <= hi + 1e-12);
        }
    }

    #[test]
    fn weighting_a_cluster_lowers_its_residuals() {
        // Two interleaved clusters with conflicting targets; weighting one
        // cluster should pull the fit toward it.
        let n = 120;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 10) as f64 * 0.1]).collect();
        let x = matrix(rows);
        let y = TargetVector::new(
            (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
        )
        .unwrap();
        let cluster: Vec<usize> = (0..n).filter(|i| i % 2 == 0).collect();

        let cfg = ForestConfig {
            n_trees: 40,
            min_samples_leaf: 5,
            seed: 5,
            ..ForestConfig::default()
        };
        let mut unweighted = ForestLearner::new(cfg.clone());
        unweighted.fit(&x, &y, &SampleWeightVector::uniform(n)).unwrap();
        let raw: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 10.0 } else { 0.1 }).collect();
        let w = crate::core::normalize_weights(&raw).unwrap();
        let mut weighted = ForestLearner::new(cfg);
        weighted.fit(&x, &y, &w).unwrap();

        let resid = |forest: &ForestLearner| {
            let pred = forest.predict_mean(&x).unwrap();
            cluster
                .iter()
                .map(|&i| (pred[i] - y.values()[i]).powi(2))
                .sum::<f64>()
                / cluster.len() as f64
        };
        assert!(resid(&weighted) < resid(&unweighted));
    }

    #[test]
    fn ij_matches_brute_force_covariance() {
        let n = 80;
        let x = matrix((0..n).map(|i| vec![(i as f64) * 0.1, ((i * 7) % 11) as f64]).collect());
        let y = TargetVector::new(
            (0..n).map(|i| (i as f64 * 0.1).sin() + ((i % 5) as f64) * 0.2).collect(),
        )
        .unwrap();
        let mut forest = ForestLearner::new(small_cfg(30, 11));
        forest.fit(&x, &y, &SampleWeightVector::uniform(n)).unwrap();

        let row = x.row(17).to_vec();
        let t = forest.tree_outputs(&row).unwrap();
        let record = forest.bootstrap_record().unwrap();
        let b = record.n_trees();
        let t_bar = t.iter().sum::<f64>() / b as f64;
        let mut v_hat = 0.0;
        for i in 0..n {
            let c_bar =
                (0..b).map(|bb| record.row(bb)[i] as f64).sum::<f64>() / b as f64;
            let cov = (0..b)
                .map(|bb| (record.row(bb)[i] as f64 - c_bar) * (t[bb] - t_bar))
                .sum::<f64>()
                / b as f64;
            v_hat += cov * cov;
        }
        let spread: f64 = t.iter().map(|v| (v - t_bar) * (v - t_bar)).sum();
        let expected = (v_hat - n as f64 / (b as f64 * b as f64) * spread).max(0.0);
        let got = forest.ij_variance(&row).unwrap();
        assert!((got - expected).abs() <= 1e-10 * expected.max(1.0));
    }

    #[test]
    fn identical_tree_outputs_give_zero_variance() {
        let x = matrix((0..20).map(|i| vec![i as f64]).collect());
        let y = TargetVector::new(vec![3.0; 20]).unwrap();
        let mut forest = ForestLearner::new(small_cfg(10, 2));
        forest.fit(&x, &y, &SampleWeightVector::uniform(20)).unwrap();
        assert_eq!(forest.ij_variance(&[5.0]).unwrap(), 0.0);
    }

    #[test]
    fn predict_is_deterministic_and_guards_errors() {
        let x = matrix((0..40).map(|i| vec![i as f64, (i * i % 19) as f64]).collect());
        let y = TargetVector::new((0..40).map(|i| (i % 6) as f64).collect()).unwrap();
        let mut forest = ForestLearner::new(small_cfg(15, 7));
        assert!(matches!(forest.predict(&x), Err(Error::NotFitted)));
        forest.fit(&x, &y, &SampleWeightVector::uniform(40)).unwrap();

        let p1 = forest.predict(&x).unwrap();
        let p2 = forest.predict(&x).unwrap();
        assert_eq!(p1.means(), p2.means());
        assert_eq!(p1.sigmas(), p2.sigmas());
        assert!(p1.sigmas().iter().all(|&s| s >= SIGMA_FLOOR));

        let wrong = matrix(vec![vec![1.0]]);
        assert!(matches!(forest.predict(&wrong), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            ForestLearner::new(small_cfg(15, 7)).fit(
                &matrix(vec![vec![1.0, 2.0]]),
                &TargetVector::new(vec![1.0]).unwrap(),
                &SampleWeightVector::uniform(1)
            ),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn injected_bootstraps_make_fits_order_invariant() {
        let n = 50;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![((i * 13) % 29) as f64, (i % 4) as f64]).collect();
        let yv: Vec<f64> = (0..n).map(|i| ((i * 5) % 23) as f64 * 0.3).collect();
        let record_rows: Vec<Vec<u32>> = {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            (0..10)
                .map(|_| {
                    let mut c = vec![0u32; n];
                    for _ in 0..n {
                        c[rng.gen_range(0..n)] += 1;
                    }
                    c
                })
                .collect()
        };

        // Permute samples and permute the bootstrap columns to match.
        let perm: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let rows_p: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let yv_p: Vec<f64> = perm.iter().map(|&i| yv[i]).collect();
        let record_rows_p: Vec<Vec<u32>> = record_rows
            .iter()
            .map(|r| perm.iter().map(|&i| r[i]).collect())
            .collect();

        let cfg = ForestConfig {
            n_trees: 10,
            min_samples_leaf: 2,
            seed: 4,
            ..ForestConfig::default()
        };
        let mut a = ForestLearner::new(cfg.clone());
        a.fit_with_bootstrap(
            &matrix(rows),
            &TargetVector::new(yv).unwrap(),
            &SampleWeightVector::uniform(n),
            BootstrapRecord::new(record_rows).unwrap(),
        )
        .unwrap();
        let mut b = ForestLearner::new(cfg);
        b.fit_with_bootstrap(
            &matrix(rows_p),
            &TargetVector::new(yv_p).unwrap(),
            &SampleWeightVector::uniform(n),
            BootstrapRecord::new(record_rows_p).unwrap(),
        )
        .unwrap();

        let queries = matrix((0..12).map(|i| vec![i as f64 * 2.0, (i % 4) as f64]).collect());
        // Identical trees up to floating-point summation order in the leaves.
        for (pa, pb) in a
            .predict_mean(&queries)
            .unwrap()
            .iter()
            .zip(&b.predict_mean(&queries).unwrap())
        {
            assert_abs_diff_eq!(pa, pb, epsilon = 1e-9);
        }
    }

    #[test]
    fn variance_estimates_stabilize_with_more_trees() {
        let n = 150;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64) * 0.05]).collect();
        let yv: Vec<f64> =
            (0..n).map(|i| (i as f64 * 0.05).sin() + ((i * 17) % 7) as f64 * 0.05).collect();
        let x = matrix(rows);
        let y = TargetVector::new(yv).unwrap();

        let mean_var = |n_trees: usize| {
            let mut forest = ForestLearner::new(ForestConfig {
                n_trees,
                min_samples_leaf: 5,
                seed: 8,
                ..ForestConfig::default()
            });
            forest.fit(&x, &y, &SampleWeightVector::uniform(n)).unwrap();
            (0..n)
                .step_by(10)
                .map(|i| forest.ij_variance(x.row(i)).unwrap())
                .sum::<f64>()
                / (n / 10) as f64
        };
        let v500 = mean_var(500);
        let v1000 = mean_var(1000);
        assert!(
            (v1000 - v500).abs() / v500.max(1e-12) < 0.25,
            "v500 {} v1000 {}",
            v500,
            v1000
        );
    }

    #[test]
    fn heteroscedastic_regions_get_larger_sigma() {
        // Noise grows with |x|; sigma estimates should rank the regions.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 400;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64) * 4.0 - 2.0).collect();
        let yv: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let noise: f64 = rng.gen_range(-1.0..1.0);
                x + noise * x.abs() * 1.5
            })
            .collect();
        let x = matrix(xs.iter().map(|&v| vec![v]).collect());
        let y = TargetVector::new(yv).unwrap();
        let mut forest = ForestLearner::new(ForestConfig {
            n_trees: 200,
            min_samples_leaf: 5,
            seed: 13,
            ..ForestConfig::default()
        });
        forest.fit(&x, &y, &SampleWeightVector::uniform(n)).unwrap();
        let pred = forest.predict(&x).unwrap();
        let (mut hi, mut hi_n, mut lo, mut lo_n) = (0.0, 0, 0.0, 0);
        for (i, &v) in xs.iter().enumerate() {
            if v.abs() > 1.5 {
                hi += pred.sigmas()[i];
                hi_n += 1;
            } else if v.abs() < 0.5 {
                lo += pred.sigmas()[i];
                lo_n += 1;
            }
        }
        assert!(hi / hi_n as f64 > lo / lo_n as f64);
    }
}
