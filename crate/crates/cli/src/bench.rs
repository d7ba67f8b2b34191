//! Repeated generate / split / train / evaluate runs over presets and
//! dimensions.

use std::fmt;
use std::path::Path;

use anyhow::Result;
use copula_bayes::datagen::{derive_seed, split_seed, ClassSpec};
use copula_bayes::{
    generate, table1_preset, train_copula_classifier, train_normal_classifier, CopulaConfig, Dataset,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Copula,
    Normal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Copula => "copula",
            Method::Normal => "normal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub presets: Vec<u8>,
    pub dims: Vec<usize>,
    pub reps: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub copula: CopulaConfig,
    /// Replaces the preset's class design when set.
    pub classes: Option<Vec<ClassSpec>>,
    /// Standardize features with training-set moments before fitting.
    #[serde(default)]
    pub standardize: bool,
}

impl BenchConfig {
    pub fn new(presets: Vec<u8>, dims: Vec<usize>, reps: usize, n_samples: usize, seed: u64) -> Self {
        BenchConfig {
            presets,
            dims,
            reps,
            n_samples,
            seed,
            copula: CopulaConfig::default(),
            classes: None,
            standardize: false,
        }
    }
}

/// One accuracy measurement. `accuracy` is NaN when the run failed, and
/// `error` then holds the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub preset: u8,
    pub dim: usize,
    pub rep: usize,
    pub method: Method,
    pub accuracy: f64,
    pub error: Option<String>,
}

/// Seed of the dataset for one (preset, dim, rep) cell.
pub fn cell_seed(base: u64, preset: u8, dim: usize, rep: usize) -> u64 {
    derive_seed(base, &[u64::from(preset), dim as u64, rep as u64])
}

fn run_cell(cfg: &BenchConfig, preset: u8, dim: usize, rep: usize) -> Vec<BenchRow> {
    let row = |method, res: copula_bayes::Result<f64>| match res {
        Ok(accuracy) => BenchRow {
            preset,
            dim,
            rep,
            method,
            accuracy,
            error: None,
        },
        Err(e) => BenchRow {
            preset,
            dim,
            rep,
            method,
            accuracy: f64::NAN,
            error: Some(e.to_string()),
        },
    };
    let data = (|| -> copula_bayes::Result<(Dataset, Dataset)> {
        let mut spec = table1_preset(preset, dim, cfg.n_samples, cell_seed(cfg.seed, preset, dim, rep))?;
        if let Some(classes) = &cfg.classes {
            spec.classes = classes.clone();
        }
        let ds = generate(&spec)?;
        let (train, test) = ds.split(spec.split, split_seed(spec.seed))?;
        if cfg.standardize {
            let moments = train.column_moments();
            return Ok((train.standardized(&moments)?, test.standardized(&moments)?));
        }
        Ok((train, test))
    })();
    let (train, test) = match data {
        Ok(parts) => parts,
        Err(e) => {
            return vec![
                row(Method::Copula, Err(e.clone())),
                row(Method::Normal, Err(e)),
            ]
        }
    };
    let copula = train_copula_classifier(&train.features, &train.labels, &cfg.copula)
        .and_then(|c| c.evaluate(&test.features, &test.labels))
        .map(|e| e.accuracy.get());
    let normal = train_normal_classifier(&train.features, &train.labels, cfg.copula.uniform_priors)
        .and_then(|c| c.evaluate(&test.features, &test.labels))
        .map(|e| e.accuracy.get());
    vec![row(Method::Copula, copula), row(Method::Normal, normal)]
}

/// Runs every cell in parallel. Rows are sorted by (preset, dim, rep,
/// method) regardless of scheduling.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRow> {
    let cells: Vec<(u8, usize, usize)> = cfg
        .presets
        .iter()
        .flat_map(|&p| {
            cfg.dims
                .iter()
                .flat_map(move |&d| (0..cfg.reps).map(move |r| (p, d, r)))
        })
        .collect();
    let mut rows: Vec<BenchRow> = cells
        .par_iter()
        .flat_map_iter(|&(p, d, r)| run_cell(cfg, p, d, r))
        .collect();
    rows.sort_by_key(|r| (r.preset, r.dim, r.rep, r.method));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub preset: u8,
    pub dim: usize,
    pub method: Method,
    /// Mean accuracy over the successful repetitions.
    pub mean_accuracy: f64,
    pub succeeded: usize,
    pub failed: usize,
}

/// Ensemble means per (preset, dim, method), in sorted order.
pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for r in rows {
        let pos = out
            .iter()
            .position(|s| (s.preset, s.dim, s.method) == (r.preset, r.dim, r.method));
        let s = match pos {
            Some(i) => &mut out[i],
            None => {
                out.push(SummaryRow {
                    preset: r.preset,
                    dim: r.dim,
                    method: r.method,
                    mean_accuracy: 0.0,
                    succeeded: 0,
                    failed: 0,
                });
                out.last_mut().expect("just pushed")
            }
        };
        if r.accuracy.is_nan() {
            s.failed += 1;
        } else {
            s.mean_accuracy += r.accuracy;
            s.succeeded += 1;
        }
    }
    for s in &mut out {
        s.mean_accuracy = if s.succeeded > 0 {
            s.mean_accuracy / s.succeeded as f64
        } else {
            f64::NAN
        };
    }
    out.sort_by_key(|s| (s.preset, s.dim, s.method));
    out
}

pub fn write_results(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["preset", "dim", "rep", "method", "accuracy"])?;
    for r in rows {
        w.write_record([
            r.preset.to_string(),
            r.dim.to_string(),
            r.rep.to_string(),
            r.method.to_string(),
            if r.accuracy.is_nan() {
                "NaN".to_string()
            } else {
                fmt_f64(r.accuracy)
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}
