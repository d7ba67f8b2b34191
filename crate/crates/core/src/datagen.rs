//! Seeded synthetic datasets: parametric marginals coupled by a per-class
//! Gaussian or t copula.
//!
//! In the default two-class design the classes share their marginals and
//! differ only in copula correlation, so the dependence structure is the
//! only class signal.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::copula::{make_correlation, CopulaKind, CopulaModel, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::marginals::ParametricMarginal;

/// Train fraction used by the presets.
pub const DEFAULT_SPLIT: f64 = 0.7;
/// Smallest dataset the generator accepts.
pub const MIN_DATASET_SIZE: usize = 16;

/// Correlation pattern, resolved against the feature dimension at
/// generation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CorrelationStructure {
    Identity,
    /// Every off-diagonal entry equals `rho`.
    Exchangeable { rho: f64 },
    /// Off-diagonal entries equal `background`, except among the first
    /// `size` features where they equal `within`.
    LeadingBlock {
        size: usize,
        within: f64,
        background: f64,
    },
}

impl CorrelationStructure {
    pub fn matrix(&self, d: usize) -> Result<CorrelationMatrix> {
        match *self {
            CorrelationStructure::Identity => Ok(CorrelationMatrix::identity(d)),
            CorrelationStructure::Exchangeable { rho } => CorrelationMatrix::exchangeable(d, rho),
            CorrelationStructure::LeadingBlock {
                size,
                within,
                background,
            } => {
                let k = size.min(d);
                let m = DMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        1.0
                    } else if i < k && j < k {
                        within
                    } else {
                        background
                    }
                });
                make_correlation(&m)
            }
        }
    }
}

/// How one class draws its features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub copula: CopulaKind,
    pub structure: CorrelationStructure,
    /// Degrees of freedom for a t copula.
    #[serde(default)]
    pub nu: Option<f64>,
    /// Multiplies every generated feature; values other than 1 give the
    /// classes different marginals.
    #[serde(default = "one")]
    pub marginal_scale: f64,
    /// Relative class size.
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl ClassSpec {
    pub fn gaussian(structure: CorrelationStructure) -> Self {
        ClassSpec {
            copula: CopulaKind::Gaussian,
            structure,
            nu: None,
            marginal_scale: 1.0,
            weight: 1.0,
        }
    }

    pub fn copula_model(&self, d: usize) -> Result<CopulaModel> {
        let rho = self.structure.matrix(d)?;
        match self.copula {
            CopulaKind::Gaussian => Ok(CopulaModel::gaussian(rho)),
            CopulaKind::StudentT => {
                let nu = self.nu.ok_or_else(|| {
                    Error::InvalidConfig("a t copula class needs nu".into())
                })?;
                CopulaModel::student_t(rho, nu)
            }
        }
    }
}

/// Default class design: Gaussian copulas with exchangeable correlation
/// 0.2 (class 0) and 0.7 (class 1).
pub fn default_classes() -> Vec<ClassSpec> {
    exchangeable_classes(DEFAULT_RHO.0, DEFAULT_RHO.1)
}

/// Exchangeable correlations of the default class design.
pub const DEFAULT_RHO: (f64, f64) = (0.2, 0.7);

/// Independence versus a leading block of 5 features correlated at 0.99
/// over a 0.06 background. The class signal stays fixed as the dimension
/// grows, so extra features only add estimation noise.
pub fn block_classes() -> Vec<ClassSpec> {
    vec![
        ClassSpec::gaussian(CorrelationStructure::Identity),
        ClassSpec::gaussian(CorrelationStructure::LeadingBlock {
            size: 5,
            within: 0.99,
            background: 0.06,
        }),
    ]
}

/// Two Gaussian classes with exchangeable correlations `rho0` and `rho1`.
pub fn exchangeable_classes(rho0: f64, rho1: f64) -> Vec<ClassSpec> {
    vec![
        ClassSpec::gaussian(CorrelationStructure::Exchangeable { rho: rho0 }),
        ClassSpec::gaussian(CorrelationStructure::Exchangeable { rho: rho1 }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// Preset row, if built from one.
    pub id: Option<u8>,
    pub dim: usize,
    pub n_samples: usize,
    /// Families assigned to features round-robin.
    pub marginal_cycle: Vec<ParametricMarginal>,
    /// One entry per class; the label is the index.
    pub classes: Vec<ClassSpec>,
    pub seed: u64,
    /// Train fraction in (0, 1).
    pub split: f64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dim < 1 {
            return bad("dim must be at least 1".into());
        }
        if self.n_samples < MIN_DATASET_SIZE {
            return bad(format!(
                "n_samples must be at least {MIN_DATASET_SIZE}, got {}",
                self.n_samples
            ));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("split must lie in (0, 1), got {}", self.split));
        }
        if self.marginal_cycle.is_empty() {
            return bad("marginal_cycle is empty".into());
        }
        for m in &self.marginal_cycle {
            m.validated()?;
        }
        if self.classes.len() < 2 {
            return bad("at least two classes are required".into());
        }
        for c in &self.classes {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return bad(format!("class weight {} must be positive", c.weight));
            }
            if !(c.marginal_scale > 0.0 && c.marginal_scale.is_finite()) {
                return bad(format!("marginal scale {} must be positive", c.marginal_scale));
            }
            c.copula_model(self.dim)?;
        }
        Ok(())
    }

    pub fn family(&self, j: usize) -> &ParametricMarginal {
        &self.marginal_cycle[j % self.marginal_cycle.len()]
    }

    /// Exact per-class sample counts (largest-remainder rounding of the
    /// class weights).
    pub fn class_counts(&self) -> Vec<usize> {
        let total: f64 = self.classes.iter().map(|c| c.weight).sum();
        let exact: Vec<f64> = self
            .classes
            .iter()
            .map(|c| c.weight / total * self.n_samples as f64)
            .collect();
        let mut counts: Vec<usize> = exact.iter().map(|v| v.floor() as usize).collect();
        let mut missing = self.n_samples - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .total_cmp(&(exact[a] - exact[a].floor()))
                .then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
        counts
    }
}

/// Marginal cycle of a preset row (1..=8).
pub fn preset_families(id: u8) -> Result<Vec<ParametricMarginal>> {
    use ParametricMarginal as P;
    let t2 = P::StudentT { nu: 2.0 };
    let gam = |shape, scale| P::Gamma { shape, scale };
    let exp = |rate| P::Exponential { rate };
    let logn = |mu, sigma| P::LogNormal { mu, sigma };
    let chi = |k| P::ChiSquare { k };
    let families = match id {
        1 => vec![t2],
        2 => vec![gam(4.0, 2.0)],
        3 => vec![exp(0.7)],
        4 => vec![gam(4.3, 1.7), logn(0.64, 0.22)],
        5 => vec![exp(0.6), gam(4.0, 2.0)],
        6 => vec![logn(0.7, 0.2), gam(5.0, 3.0), exp(0.5)],
        7 => vec![exp(0.32), gam(3.1, 4.3), chi(3.2)],
        8 => vec![logn(0.53, 0.36), gam(6.2, 3.3), exp(0.44), chi(5.0)],
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset {other}; presets are 1 to 8"
            )))
        }
    };
    Ok(families)
}

/// Spec for preset row `id` with the default class design and a 70/30 split.
pub fn table1_preset(id: u8, dim: usize, n: usize, seed: u64) -> Result<DatasetSpec> {
    let spec = DatasetSpec {
        id: Some(id),
        dim,
        n_samples: n,
        marginal_cycle: preset_families(id)?,
        classes: default_classes(),
        seed,
        split: DEFAULT_SPLIT,
    };
    spec.validate()?;
    Ok(spec)
}

/// Labeled feature matrix, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Generating spec, when the data came from [`generate`].
    pub spec: Option<DatasetSpec>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = features.first() {
            if let Some(row) = features.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        Ok(Dataset {
            features,
            labels,
            spec: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.features.iter().map(|r| r[j]).collect()
    }

    /// Seeded shuffle, then the first `round(fraction * N)` rows become the
    /// training part.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let n = self.len();
        let n_train = (fraction * n as f64).round() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::InvalidConfig(format!(
                "split of {n} rows at {fraction} leaves one side empty"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let part = |idx: &[usize]| Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            spec: self.spec.clone(),
        };
        Ok((part(&order[..n_train]), part(&order[n_train..])))
    }

    /// Per-column mean and standard deviation (1/N normalization).
    pub fn column_moments(&self) -> Vec<(f64, f64)> {
        let n = self.features.len() as f64;
        (0..self.dim())
            .map(|j| {
                let mean = self.features.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = self.features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect()
    }

    /// Centers and scales each column by `moments`. A column with zero
    /// spread is only centered.
    pub fn standardized(&self, moments: &[(f64, f64)]) -> Result<Dataset> {
        if moments.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: moments.len(),
            });
        }
        let features = self
            .features
            .iter()
            .map(|r| {
                r.iter()
                    .zip(moments)
                    .map(|(&x, &(m, s))| if s > 0.0 { (x - m) / s } else { x - m })
                    .collect()
            })
            .collect();
        Ok(Dataset {
            features,
            labels: self.labels.clone(),
            spec: self.spec.clone(),
        })
    }
}

/// Draws the dataset described by `spec`. Classes get exact counts from
/// their weights; rows are shuffled afterwards.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim;
    let mut features = Vec::with_capacity(spec.n_samples);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for (label, (class, count)) in spec.classes.iter().zip(spec.class_counts()).enumerate() {
        let model = class.copula_model(d)?;
        for u in model.sample_with(count, &mut rng) {
            let x = u
                .iter()
                .enumerate()
                .map(|(j, &p)| Ok(class.marginal_scale * spec.family(j).quantile(p)?))
                .collect::<Result<Vec<f64>>>()?;
            features.push(x);
            labels.push(label);
        }
    }
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.shuffle(&mut rng);
    Ok(Dataset {
        features: order.iter().map(|&i| std::mem::take(&mut features[i])).collect(),
        labels: order.iter().map(|&i| labels[i]).collect(),
        spec: Some(spec.clone()),
    })
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed from a base seed and a path of integers.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Seed of the train/test shuffle for a dataset generated from `dataset_seed`.
pub fn split_seed(dataset_seed: u64) -> u64 {
    derive_seed(dataset_seed, &[u64::from_le_bytes(*b"split\0\0\0")])
}

/// One dataset per dimension, each with a seed derived from the base seed
/// and the dimension.
pub fn dimension_sweep(base: &DatasetSpec, dims: &[usize]) -> Result<Vec<Dataset>> {
    if dims.is_empty() {
        return Err(Error::InvalidConfig("dimension list is empty".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(Error::InvalidConfig(format!("sweep dimensions must be >= 2, got {d}")));
    }
    dims.iter()
        .map(|&d| {
            let spec = DatasetSpec {
                dim: d,
                seed: derive_seed(base.seed, &[d as u64]),
                ..base.clone()
            };
            generate(&spec)
        })
        .collect()
}
