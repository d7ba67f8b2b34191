use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use copula_bayes::datagen::{block_classes, exchangeable_classes, split_seed, ClassSpec, DEFAULT_RHO};
use copula_bayes::{
    generate, table1_preset, train_copula_classifier_with_reports, train_normal_classifier,
    Classifier, CopulaConfig, CopulaKind, Estimation, FamilyKind, MarginalMode,
};
use copula_bayes_cli::bench::{run_bench, summarize, write_results, BenchConfig};
use copula_bayes_cli::io::{
    read_dataset, read_json, sibling, write_dataset, write_json, write_predictions,
};
use copula_bayes_cli::manifest::Manifest;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "copula-bayes", version, about = "Copula-based Bayesian discriminant classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a preset
    Gen(GenArgs),
    /// Train a classifier on a labeled dataset
    Train(TrainArgs),
    /// Predict labels for a dataset
    Predict(PredictArgs),
    /// Report accuracy and confusion matrix on a labeled dataset
    Eval(EvalArgs),
    /// Generate, split, train and evaluate over presets and dimensions
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Separation {
    /// Exchangeable correlations --rho0 and --rho1
    Exchangeable,
    /// Independence versus a strongly correlated leading block
    Block,
}

#[derive(Debug, Args, Serialize)]
struct ClassDesign {
    /// How the two classes differ
    #[arg(long, value_enum, default_value = "exchangeable")]
    separation: Separation,
    /// Class 0 correlation for the exchangeable design
    #[arg(long, default_value_t = DEFAULT_RHO.0)]
    rho0: f64,
    /// Class 1 correlation for the exchangeable design
    #[arg(long, default_value_t = DEFAULT_RHO.1)]
    rho1: f64,
}

impl ClassDesign {
    fn classes(&self) -> Vec<ClassSpec> {
        match self.separation {
            Separation::Block => block_classes(),
            Separation::Exchangeable => exchangeable_classes(self.rho0, self.rho1),
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    /// Preset row, 1 to 8
    #[arg(long)]
    preset: u8,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 4000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    design: ClassDesign,
    /// Also write `<stem>-train` and `<stem>-test` files split at this fraction
    #[arg(long)]
    split: Option<f64>,
    /// Center and scale every column to unit variance
    #[arg(long)]
    standardize: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ModelArgs {
    #[arg(long, default_value = "gaussian", value_parser = parse_copula)]
    copula: CopulaKind,
    /// `empirical`, or a comma-separated family list assigned round-robin
    #[arg(long, default_value = "empirical", value_parser = parse_marginals)]
    marginals: MarginalMode,
    /// Defaults to eml for the Gaussian copula and cml for t
    #[arg(long, value_parser = parse_estimation)]
    estimation: Option<Estimation>,
    /// Equal class priors instead of class frequencies
    #[arg(long)]
    uniform_priors: bool,
}

impl ModelArgs {
    fn config(&self) -> Result<CopulaConfig> {
        let estimation = self.estimation.unwrap_or(match self.copula {
            CopulaKind::Gaussian => Estimation::Eml,
            CopulaKind::StudentT => Estimation::Cml,
        });
        let config = CopulaConfig {
            copula: self.copula,
            marginals: self.marginals.clone(),
            estimation,
            uniform_priors: self.uniform_priors,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Baseline {
    Normal,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// Labeled dataset CSV
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Train the multivariate-normal discriminant instead
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// Recorded in the manifest; training itself is deterministic
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV, with or without a label column
    data: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled dataset CSV
    data: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report; defaults to `<data stem>-eval.json` next to the data
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1")]
    presets: Vec<u8>,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,100")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 4000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    design: ClassDesign,
    #[command(flatten)]
    model: ModelArgs,
    /// Standardize features with training-set moments before fitting
    #[arg(long)]
    standardize: bool,
    #[arg(short, long)]
    output: PathBuf,
}

fn parse_copula(s: &str) -> Result<CopulaKind, String> {
    s.parse().map_err(|e: copula_bayes::Error| e.to_string())
}

fn parse_estimation(s: &str) -> Result<Estimation, String> {
    s.parse().map_err(|e: copula_bayes::Error| e.to_string())
}

fn parse_marginals(s: &str) -> Result<MarginalMode, String> {
    if s.eq_ignore_ascii_case("empirical") {
        return Ok(MarginalMode::Empirical);
    }
    s.split(',')
        .map(|f| f.trim().parse::<FamilyKind>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()
        .map(MarginalMode::Parametric)
}

fn config_value<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    serde_json::to_value(args).context("cannot serialize run configuration")
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let mut spec = table1_preset(args.preset, args.dim, args.n, args.seed)?;
    spec.classes = args.design.classes();
    if let Some(f) = args.split {
        spec.split = f;
    }
    spec.validate()?;
    let mut ds = generate(&spec)?;
    if args.standardize {
        ds = ds.standardized(&ds.column_moments())?;
    }
    write_dataset(&args.output, &ds)?;
    let mut manifest = Manifest::new("gen", Some(args.seed), config_value(args)?);
    manifest.config["dataset_spec"] = config_value(&spec)?;
    manifest = manifest.output(&args.output);
    if let Some(fraction) = args.split {
        let seed = split_seed(spec.seed);
        let (train, test) = ds.split(fraction, seed)?;
        let (train_path, test_path) = (sibling(&args.output, "train"), sibling(&args.output, "test"));
        write_dataset(&train_path, &train)?;
        write_dataset(&test_path, &test)?;
        manifest.config["split_seed"] = seed.into();
        manifest = manifest.output(&train_path).output(&test_path);
    }
    manifest.write_for(&args.output)?;
    println!("wrote {} rows x {} features to {}", ds.len(), ds.dim(), args.output.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let ds = read_dataset(&args.data, true)?;
    let mut manifest = Manifest::new("train", args.seed, config_value(args)?).input(&args.data);
    let classifier = match args.baseline {
        Some(Baseline::Normal) => {
            let c = train_normal_classifier(&ds.features, &ds.labels, args.model.uniform_priors)?;
            if let Classifier::Normal { classes } = &c {
                for m in classes {
                    println!(
                        "class {}: prior {:.4}, logdet {:.6}, ridge {:.3e}",
                        m.label,
                        m.prior.get(),
                        m.logdet(),
                        m.ridge()
                    );
                }
            }
            c
        }
        None => {
            let config = args.model.config()?;
            manifest.config["resolved_model"] = config_value(&config)?;
            let (c, reports) = train_copula_classifier_with_reports(&ds.features, &ds.labels, &config)?;
            for (label, r) in c.labels().iter().zip(&reports) {
                let nu = r.model.nu().map_or(String::new(), |nu| format!(", nu {nu:.4}"));
                println!(
                    "class {label}: loglik {:.6}{nu}, repaired {}, converged {}",
                    r.loglik, r.repaired, r.converged
                );
            }
            c
        }
    };
    write_json(&args.output, &classifier)?;
    manifest.output(&args.output).write_for(&args.output)?;
    Ok(())
}

fn load_for(model: &Path, data: &Path, require_labels: bool) -> Result<(Classifier, copula_bayes::Dataset)> {
    let classifier: Classifier = read_json(model)?;
    let ds = read_dataset(data, require_labels)?;
    if ds.dim() != classifier.dim() {
        bail!(
            "dimension mismatch: model {} expects {} features, {} has {}",
            model.display(),
            classifier.dim(),
            data.display(),
            ds.dim()
        );
    }
    Ok((classifier, ds))
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let (classifier, ds) = load_for(&args.model, &args.data, false)?;
    let predicted = classifier.classify_batch(&ds.features)?;
    write_predictions(&args.output, &predicted)?;
    Manifest::new("predict", args.seed, config_value(args)?)
        .input(&args.model)
        .input(&args.data)
        .output(&args.output)
        .write_for(&args.output)?;
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    accuracy_percent: f64,
    n: usize,
    labels: Vec<usize>,
    /// Rows are true classes, columns predicted classes.
    confusion: Vec<Vec<usize>>,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (classifier, ds) = load_for(&args.model, &args.data, true)?;
    let e = classifier.evaluate(&ds.features, &ds.labels)?;
    let pct = 100.0 * e.accuracy.get();
    println!("accuracy: {pct:.2}");
    println!("confusion (rows true, columns predicted):");
    let header: Vec<String> = e.labels.iter().map(|l| format!("{l:>8}")).collect();
    println!("{:>8}{}", "", header.join(""));
    for (l, row) in e.labels.iter().zip(&e.confusion) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>8}")).collect();
        println!("{l:>8}{}", cells.join(""));
    }
    let output = args.output.clone().unwrap_or_else(|| {
        sibling(&args.data, "eval").with_extension("json")
    });
    write_json(
        &output,
        &EvalReport {
            accuracy_percent: pct,
            n: ds.len(),
            labels: e.labels,
            confusion: e.confusion,
        },
    )?;
    Manifest::new("eval", args.seed, config_value(args)?)
        .input(&args.model)
        .input(&args.data)
        .output(&output)
        .write_for(&output)?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig::new(args.presets.clone(), args.dims.clone(), args.reps, args.n, args.seed);
    cfg.copula = args.model.config()?;
    cfg.classes = Some(args.design.classes());
    cfg.standardize = args.standardize;
    let rows = run_bench(&cfg);
    write_results(&args.output, &rows)?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        log::warn!(
            "preset {} dim {} rep {} {}: {}",
            r.preset,
            r.dim,
            r.rep,
            r.method,
            r.error.as_deref().unwrap_or_default()
        );
    }
    println!("{:>6} {:>5} {:>7} {:>9} {:>4} {:>6}", "preset", "dim", "method", "accuracy", "ok", "failed");
    for s in summarize(&rows) {
        println!(
            "{:>6} {:>5} {:>7} {:>9.2} {:>4} {:>6}",
            s.preset,
            s.dim,
            s.method.to_string(),
            100.0 * s.mean_accuracy,
            s.succeeded,
            s.failed
        );
    }
    let mut manifest = Manifest::new("bench", Some(args.seed), config_value(args)?);
    manifest.config["bench"] = config_value(&cfg)?;
    manifest.output(&args.output).write_for(&args.output)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
