//! Dataset ingestion, modality splitting, cross-validation planning,
//! standardization, and the synthetic multi-modal generator.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core::{ModalityMatrix, TargetVector};
use crate::error::{Error, Result};

/// The 22 UCI column names, in file order.
pub const PARKINSONS_COLUMNS: [&str; 22] = [
    "subject#",
    "age",
    "sex",
    "test_time",
    "motor_UPDRS",
    "total_UPDRS",
    "Jitter(%)",
    "Jitter(Abs)",
    "Jitter:RAP",
    "Jitter:PPQ5",
    "Jitter:DDP",
    "Shimmer",
    "Shimmer(dB)",
    "Shimmer:APQ3",
    "Shimmer:APQ5",
    "Shimmer:APQ11",
    "Shimmer:DDA",
    "NHR",
    "HNR",
    "RPDE",
    "DFA",
    "PPE",
];

pub const AMPLITUDE_COLUMNS: [&str; 10] = [
    "Shimmer",
    "Shimmer(dB)",
    "Shimmer:APQ3",
    "Shimmer:APQ5",
    "Shimmer:APQ11",
    "Shimmer:DDA",
    "NHR",
    "HNR",
    "RPDE",
    "DFA",
];

pub const FREQUENCY_COLUMNS: [&str; 6] = [
    "Jitter(%)",
    "Jitter(Abs)",
    "Jitter:RAP",
    "Jitter:PPQ5",
    "Jitter:DDP",
    "PPE",
];

/// One row of the Parkinson's Telemonitoring dataset.
#[derive(Debug, Clone)]
pub struct ParkinsonsRecord {
    pub subject_id: u32,
    pub age: f64,
    pub sex: f64,
    pub test_time: f64,
    pub motor_updrs: f64,
    pub total_updrs: f64,
    /// The 16 voice measures, in the order of `PARKINSONS_COLUMNS[6..]`.
    pub voice: [f64; 16],
}

impl ParkinsonsRecord {
    /// Looks up a column by its UCI header name.
    pub fn column(&self, name: &str) -> Option<f64> {
        match name {
            "subject#" => Some(self.subject_id as f64),
            "age" => Some(self.age),
            "sex" => Some(self.sex),
            "test_time" => Some(self.test_time),
            "motor_UPDRS" => Some(self.motor_updrs),
            "total_UPDRS" => Some(self.total_updrs),
            _ => PARKINSONS_COLUMNS[6..]
                .iter()
                .position(|c| *c == name)
                .map(|i| self.voice[i]),
        }
    }
}

/// Parses the UCI Parkinson's Telemonitoring CSV (comma-separated, header row,
/// dot-decimal reals). Emits a warning on stderr if the record count differs
/// from the canonical 5875 (the file may be user-filtered).
pub fn load_parkinsons(path: &Path) -> Result<Vec<ParkinsonsRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut index = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        index.insert(h.clone(), i);
    }
    let missing: Vec<String> = PARKINSONS_COLUMNS
        .iter()
        .filter(|c| !index.contains_key(**c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::SchemaError { missing });
    }

    let col = |name: &str| index[name];
    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx + 2; // 1-based, after the header
        let row = row?;
        let get = |name: &str| -> Result<f64> {
            let raw = row.get(col(name)).ok_or_else(|| Error::ParseError {
                line,
                message: format!("missing field '{}'", name),
            })?;
            raw.parse::<f64>().map_err(|e| Error::ParseError {
                line,
                message: format!("field '{}' = '{}': {}", name, raw, e),
            })
        };
        let total_updrs = get("total_UPDRS")?;
        if !(0.0..=199.0).contains(&total_updrs) {
            return Err(Error::ParseError {
                line,
                message: format!("total_UPDRS {} outside [0, 199]", total_updrs),
            });
        }
        let mut voice = [0.0; 16];
        for (i, name) in PARKINSONS_COLUMNS[6..].iter().enumerate() {
            let v = get(name)?;
            if !v.is_finite() {
                return Err(Error::ParseError {
                    line,
                    message: format!("non-finite value in '{}'", name),
                });
            }
            voice[i] = v;
        }
        records.push(ParkinsonsRecord {
            subject_id: get("subject#")? as u32,
            age: get("age")?,
            sex: get("sex")?,
            test_time: get("test_time")?,
            motor_updrs: get("motor_UPDRS")?,
            total_updrs,
            voice,
        });
    }

    if !records.is_empty() && records.len() != 5875 {
        eprintln!(
            "warning: {} records loaded from {} (canonical file has 5875)",
            records.len(),
            path.display()
        );
    }
    Ok(records)
}

/// Maps modality ids to ordered lists of source column names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalitySplitSpec {
    columns: BTreeMap<String, Vec<String>>,
}

impl ModalitySplitSpec {
    pub fn new(columns: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (id, cols) in &columns {
            if cols.is_empty() {
                return Err(Error::InvalidConfig(format!("modality '{}' has no columns", id)));
            }
            for c in cols {
                if !seen.insert(c.clone()) {
                    return Err(Error::InvalidConfig(format!(
                        "column '{}' appears in more than one modality",
                        c
                    )));
                }
            }
        }
        Ok(Self { columns })
    }

    /// The paper's Amplitude/Frequency split of the voice measures.
    pub fn parkinsons_default() -> Self {
        let mut columns = BTreeMap::new();
        columns.insert(
            "Amplitude".to_string(),
            AMPLITUDE_COLUMNS.iter().map(|c| c.to_string()).collect(),
        );
        columns.insert(
            "Frequency".to_string(),
            FREQUENCY_COLUMNS.iter().map(|c| c.to_string()).collect(),
        );
        Self { columns }
    }

    pub fn modalities(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.columns.iter()
    }
}

/// Splits records into per-modality matrices plus the total_UPDRS targets,
/// preserving row order.
pub fn split_modalities(
    records: &[ParkinsonsRecord],
    spec: &ModalitySplitSpec,
) -> Result<(BTreeMap<String, ModalityMatrix>, TargetVector)> {
    let mut out = BTreeMap::new();
    for (id, cols) in spec.modalities() {
        let missing: Vec<String> = cols
            .iter()
            .filter(|c| records.first().map_or(false, |r| r.column(c).is_none()))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::SchemaError { missing });
        }
        let rows: Vec<Vec<f64>> = records
            .iter()
            .map(|r| cols.iter().map(|c| r.column(c).unwrap()).collect())
            .collect();
        out.insert(id.clone(), ModalityMatrix::from_rows(id.clone(), rows, cols.clone())?);
    }
    let targets = TargetVector::new(records.iter().map(|r| r.total_updrs).collect())?;
    Ok((out, targets))
}

/// A balanced, seed-reproducible k-fold assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Indices held out by fold `f`, in ascending order.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == f).collect()
    }

    /// Indices used for training when fold `f` is held out.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != f).collect()
    }
}

/// Uniformly random balanced assignment of `n` samples to `k` folds, fully
/// determined by `seed`. Fold sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("fold count {} must be at least 2", k)));
    }
    if n < k {
        return Err(Error::InsufficientData(format!("{} samples for {} folds", n, k)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Fold assignment that keeps all rows of a group (e.g. one subject) in the
/// same fold. Groups are shuffled and dealt greedily to the currently smallest
/// fold, so row-count balance is approximate.
pub fn make_grouped_folds(groups: &[u32], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("fold count {} must be at least 2", k)));
    }
    let mut unique: Vec<u32> = {
        let set: BTreeSet<u32> = groups.iter().copied().collect();
        set.into_iter().collect()
    };
    if unique.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} groups for {} folds",
            unique.len(),
            k
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unique.shuffle(&mut rng);
    let mut fold_sizes = vec![0usize; k];
    let mut fold_of_group = BTreeMap::new();
    for g in unique {
        let rows = groups.iter().filter(|&&x| x == g).count();
        let f = (0..k).min_by_key(|&f| (fold_sizes[f], f)).unwrap();
        fold_sizes[f] += rows;
        fold_of_group.insert(g, f);
    }
    let assignments = groups.iter().map(|g| fold_of_group[g]).collect();
    Ok(FoldPlan { k, assignments, seed })
}

/// Deterministic shuffled train/validation split. The train side gets
/// floor((1 - val_fraction) * n) samples; both sides are returned in
/// ascending index order.
pub fn train_val_split(n: usize, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&val_fraction) || val_fraction == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "val_fraction {} must be in (0, 1)",
            val_fraction
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("cannot split {} samples", n)));
    }
    let n_train = ((1.0 - val_fraction) * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InsufficientData(format!(
            "split of {} samples at fraction {} leaves an empty side",
            n, val_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut train: Vec<usize> = order[..n_train].to_vec();
    let mut val: Vec<usize> = order[n_train..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Per-feature affine standardization fitted on a training matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Features with zero variance on the training matrix; mapped to 0.
    pub constant: Vec<bool>,
}

impl StandardScaler {
    /// Fits per-feature mean and population standard deviation.
    pub fn fit(train: &ModalityMatrix) -> Result<Self> {
        let n = train.n_rows();
        if n == 0 {
            return Err(Error::InsufficientData("empty training matrix".into()));
        }
        let d = train.n_cols();
        let mut means = vec![0.0; d];
        for row in train.rows() {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= n as f64;
        }
        let mut vars = vec![0.0; d];
        for row in train.rows() {
            for j in 0..d {
                let dlt = row[j] - means[j];
                vars[j] += dlt * dlt;
            }
        }
        let mut stds = Vec::with_capacity(d);
        let mut constant = Vec::with_capacity(d);
        for v in vars {
            let s = (v / n as f64).sqrt();
            if s < 1e-12 {
                stds.push(1.0);
                constant.push(true);
            } else {
                stds.push(s);
                constant.push(false);
            }
        }
        Ok(Self { means, stds, constant })
    }

    pub fn transform(&self, x: &ModalityMatrix) -> Result<ModalityMatrix> {
        if x.n_cols() != self.means.len() {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} features, scaler expects {}",
                x.n_cols(),
                self.means.len()
            )));
        }
        let rows: Vec<Vec<f64>> = x.rows().map(|row| self.transform_row(row)).collect();
        ModalityMatrix::from_rows(x.modality_id().to_string(), rows, x.feature_names().to_vec())
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.constant[j] {
                    0.0
                } else {
                    (v - self.means[j]) / self.stds[j]
                }
            })
            .collect()
    }

    pub fn inverse_transform(&self, x: &ModalityMatrix) -> Result<ModalityMatrix> {
        if x.n_cols() != self.means.len() {
            return Err(Error::ShapeMismatch("feature count mismatch".into()));
        }
        let rows: Vec<Vec<f64>> = x
            .rows()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if self.constant[j] {
                            self.means[j]
                        } else {
                            v * self.stds[j] + self.means[j]
                        }
                    })
                    .collect()
            })
            .collect();
        ModalityMatrix::from_rows(x.modality_id().to_string(), rows, x.feature_names().to_vec())
    }
}

/// Standardizes `train` and applies the identical transform to `others`.
pub fn standardize(
    train: &ModalityMatrix,
    others: &[&ModalityMatrix],
) -> Result<(ModalityMatrix, Vec<ModalityMatrix>, StandardScaler)> {
    let scaler = StandardScaler::fit(train)?;
    let train_out = scaler.transform(train)?;
    let others_out = others.iter().map(|m| scaler.transform(m)).collect::<Result<_>>()?;
    Ok((train_out, others_out, scaler))
}

/// Noise profile for the synthetic generator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "sigma")]
pub enum NoiseProfile {
    /// Constant noise scale.
    Homoscedastic(f64),
    /// Noise scale growing with a latent variable; concentrated so that most
    /// samples are low-noise and a minority carry large noise.
    Heteroscedastic(f64),
}

impl NoiseProfile {
    fn scale(&self) -> f64 {
        match self {
            NoiseProfile::Homoscedastic(s) | NoiseProfile::Heteroscedastic(s) => *s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticModality {
    pub id: String,
    pub dim: usize,
    /// Observation noise on this modality's view of the primary latent.
    pub noise: NoiseProfile,
    /// Whether this modality's features expose the noise-driving latent, so a
    /// learner can resolve the heteroscedastic target noise.
    pub sees_noise_latent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub modalities: Vec<SyntheticModality>,
    /// Noise on the regression target itself; this is the sigma* the generator
    /// reports as ground truth.
    pub target_noise: NoiseProfile,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Three modalities with increasing observation noise (so individual RMSE
    /// ranks them first-to-last) and heteroscedastic target noise visible only
    /// to the later modalities.
    pub fn default_with_seed(seed: u64) -> Self {
        Self {
            n_samples: 2000,
            modalities: vec![
                SyntheticModality {
                    id: "m1".into(),
                    dim: 6,
                    noise: NoiseProfile::Homoscedastic(0.02),
                    sees_noise_latent: false,
                },
                SyntheticModality {
                    id: "m2".into(),
                    dim: 6,
                    noise: NoiseProfile::Homoscedastic(0.10),
                    sees_noise_latent: true,
                },
                SyntheticModality {
                    id: "m3".into(),
                    dim: 6,
                    noise: NoiseProfile::Homoscedastic(0.18),
                    sees_noise_latent: true,
                },
            ],
            target_noise: NoiseProfile::Heteroscedastic(1.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be positive".into()));
        }
        if self.modalities.is_empty() {
            return Err(Error::InvalidConfig("at least one modality required".into()));
        }
        for m in &self.modalities {
            if m.dim == 0 {
                return Err(Error::InvalidConfig(format!("modality '{}' has dim 0", m.id)));
            }
            if m.noise.scale() < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "modality '{}' has negative noise scale",
                    m.id
                )));
            }
        }
        if self.target_noise.scale() < 0.0 {
            return Err(Error::InvalidConfig("negative target noise scale".into()));
        }
        let ids: BTreeSet<&str> = self.modalities.iter().map(|m| m.id.as_str()).collect();
        if ids.len() != self.modalities.len() {
            return Err(Error::InvalidConfig("duplicate modality ids".into()));
        }
        Ok(())
    }
}

/// Output of the synthetic generator, including the ground truth the
/// calibration oracle needs.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub modalities: BTreeMap<String, ModalityMatrix>,
    pub targets: TargetVector,
    /// Clean target before noise: the exact conditional mean.
    pub mu_star: Vec<f64>,
    /// Per-sample target noise standard deviation.
    pub sigma_star: Vec<f64>,
}

fn softplus2(t: f64) -> f64 {
    // ln(1 + e^{2t}) / 2, overflow-safe
    if t > 20.0 {
        t
    } else {
        (1.0 + (2.0 * t).exp()).ln() / 2.0
    }
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    loop {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Generates a multi-modal regression dataset from two shared latent factors:
/// `z` drives the smooth target signal, `v` drives the target noise scale.
/// Each modality observes a nonlinear projection of `z` (plus its observation
/// noise); modalities with `sees_noise_latent` also expose `v` directly.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let n = spec.n_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let z: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
    let v: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();

    let mu_star: Vec<f64> = z.iter().map(|&z| (2.0 * z).sin() + 0.5 * z).collect();
    let sigma_star: Vec<f64> = match spec.target_noise {
        NoiseProfile::Homoscedastic(s) => vec![s.max(1e-12); n],
        NoiseProfile::Heteroscedastic(s) => v
            .iter()
            .map(|&v| (s * (0.05 + softplus2(v - 1.2))).max(1e-12))
            .collect(),
    };
    let targets: Vec<f64> = (0..n)
        .map(|i| mu_star[i] + sigma_star[i] * standard_normal(&mut rng))
        .collect();

    let mut modalities = BTreeMap::new();
    for m in &spec.modalities {
        // Fixed nonlinear projection coefficients, drawn once per modality.
        let coeffs: Vec<(f64, f64)> = (0..m.dim)
            .map(|_| (0.5 + 1.5 * rng.gen::<f64>(), standard_normal(&mut rng) * 0.5))
            .collect();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let obs_noise = match m.noise {
                NoiseProfile::Homoscedastic(s) => s,
                NoiseProfile::Heteroscedastic(s) => s * (0.2 + v[i].abs()),
            };
            let mut row = Vec::with_capacity(m.dim);
            // Feature 0: direct (noisy) view of the signal latent.
            row.push(z[i] + obs_noise * standard_normal(&mut rng));
            if m.dim > 1 {
                if m.sees_noise_latent {
                    // Feature 1: near-clean view of the noise latent.
                    row.push(v[i] + 0.01 * standard_normal(&mut rng));
                } else {
                    row.push((0.8 * z[i]).tanh() + obs_noise * standard_normal(&mut rng));
                }
            }
            for &(a, b) in coeffs.iter().take(m.dim).skip(2) {
                row.push((a * z[i] + b).tanh() + obs_noise * standard_normal(&mut rng));
            }
            rows.push(row);
        }
        let names: Vec<String> = (0..m.dim).map(|j| format!("{}_f{}", m.id, j)).collect();
        modalities.insert(m.id.clone(), ModalityMatrix::from_rows(m.id.clone(), rows, names)?);
    }

    Ok(SyntheticDataset {
        modalities,
        targets: TargetVector::new(targets)?,
        mu_star,
        sigma_star,
    })
}
