//! CSV and JSON file formats.
//!
//! Dataset files have a header `label,f1,...,fd` followed by one row per
//! sample. Features are written with 17 significant digits so they read back
//! bit-exactly. Prediction files use `index,label`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use copula_bayes::Dataset;
use serde::Serialize;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["label".to_string()];
    header.extend((1..=ds.dim()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (x, label) in ds.features.iter().zip(&ds.labels) {
        let mut rec = vec![label.to_string()];
        rec.extend(x.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset CSV. When `require_labels` is false a file without a
/// leading `label` column is accepted and labels are left empty.
pub fn read_dataset(path: &Path, require_labels: bool) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let header = r.headers()?.clone();
    let has_labels = header.get(0) == Some("label");
    if require_labels && !has_labels {
        bail!("{}: header must start with 'label'", path.display());
    }
    let first_feature = usize::from(has_labels);
    let d = header.len() - first_feature;
    if d == 0 {
        bail!("{}: no feature columns", path.display());
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in r.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = rec.with_context(|| format!("{}:{line}: malformed row", path.display()))?;
        if rec.len() != header.len() {
            bail!(
                "{}:{line}: expected {} fields, found {}",
                path.display(),
                header.len(),
                rec.len()
            );
        }
        if has_labels {
            let l: usize = rec[0].parse().with_context(|| {
                format!("{}:{line}: label '{}' is not a non-negative integer", path.display(), &rec[0])
            })?;
            labels.push(l);
        }
        let x = (first_feature..rec.len())
            .map(|k| {
                let v: f64 = rec[k].parse().with_context(|| {
                    format!("{}:{line}: field {} ('{}') is not a number", path.display(), k + 1, &rec[k])
                })?;
                if !v.is_finite() {
                    bail!("{}:{line}: field {} is not finite", path.display(), k + 1);
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(x);
    }
    if features.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(Dataset {
        features,
        labels,
        spec: None,
    })
}

pub fn write_predictions(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["index", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.with_context(|| format!("{}:{line}: malformed row", path.display()))?;
        let idx: usize = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .with_context(|| format!("{}:{line}: bad index", path.display()))?;
        if idx != i {
            bail!("{}:{line}: expected index {i}, found {idx}", path.display());
        }
        out.push(
            rec.get(1)
                .unwrap_or("")
                .parse()
                .with_context(|| format!("{}:{line}: bad label", path.display()))?,
        );
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("cannot parse {}", path.display()))
}

/// `dir/stem-suffix.ext` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{suffix}.{ext}"),
        None => format!("{stem}-{suffix}"),
    };
    path.with_file_name(name)
}

/// Manifest path for an output file: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
