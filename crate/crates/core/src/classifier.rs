//! Bayesian discriminant classifiers: the copula discriminant and the
//! multivariate-normal (quadratic discriminant) baseline.
//!
//! Class labels are `usize` values. A classifier stores its classes sorted by
//! label, and ties between discriminants go to the lowest class index.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaKind, CopulaModel};
use crate::error::{Error, Result};
use crate::estimation::{cml_fit_gaussian, cml_fit_t, eml_fit_gaussian, Estimation, FitReport};
use crate::marginals::{
    fit_empirical, fit_parametric, FamilyKind, Marginal, DENSITY_FLOOR, MIN_SAMPLES,
};
use crate::specfn::{Probability, LN_2PI};

/// Tolerance on the sum of class priors.
pub const PRIOR_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "families", rename_all = "snake_case")]
pub enum MarginalMode {
    /// Families assigned to features round-robin.
    Parametric(Vec<FamilyKind>),
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopulaConfig {
    pub copula: CopulaKind,
    pub marginals: MarginalMode,
    pub estimation: Estimation,
    /// Use equal priors instead of class frequencies.
    #[serde(default)]
    pub uniform_priors: bool,
}

impl Default for CopulaConfig {
    fn default() -> Self {
        CopulaConfig {
            copula: CopulaKind::Gaussian,
            marginals: MarginalMode::Empirical,
            estimation: Estimation::Eml,
            uniform_priors: false,
        }
    }
}

impl CopulaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.copula == CopulaKind::StudentT && self.estimation == Estimation::Eml {
            return Err(Error::InvalidConfig(
                "the t copula is calibrated with CML only; joint EML over (rho, nu) is not available"
                    .into(),
            ));
        }
        if let MarginalMode::Parametric(f) = &self.marginals {
            if f.is_empty() {
                return Err(Error::InvalidConfig("parametric family list is empty".into()));
            }
        }
        Ok(())
    }
}

/// Per-class copula model: marginals, copula and prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub label: usize,
    pub prior: Probability,
    pub marginals: Vec<Marginal>,
    pub copula: CopulaModel,
}

/// Keeps a marginal cdf value inside (0, 1) so normal and t quantiles of it
/// are finite.
fn clamp_interior(p: f64) -> f64 {
    if p.is_nan() {
        0.5
    } else {
        p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

impl ClassModel {
    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    /// `ln c(F(x)) + Σ ln f_k(x_k) + ln P`. Marginal log-densities that are
    /// undefined at `x` (outside the support) take the value `ln(DENSITY_FLOOR)`.
    pub fn discriminant(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let floor = DENSITY_FLOOR.ln();
        let mut u = Vec::with_capacity(x.len());
        let mut marginal_sum = 0.0;
        for (m, &xj) in self.marginals.iter().zip(x) {
            u.push(clamp_interior(m.cdf(xj).unwrap_or(0.5)));
            let l = m.logpdf(xj).unwrap_or(floor);
            marginal_sum += if l.is_nan() || l == f64::NEG_INFINITY {
                floor
            } else {
                l
            };
        }
        Ok(self.copula.logdensity(&u)? + marginal_sum + self.prior.get().ln())
    }
}

/// Per-class multivariate normal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormalRepr", into = "NormalRepr")]
pub struct NormalClassModel {
    pub label: usize,
    pub prior: Probability,
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
    logdet: f64,
    ridge: f64,
}

#[derive(Serialize, Deserialize)]
struct NormalRepr {
    label: usize,
    prior: Probability,
    mean: Vec<f64>,
    /// Row-major, ridge already included.
    covariance: Vec<f64>,
    ridge: f64,
}

impl TryFrom<NormalRepr> for NormalClassModel {
    type Error = Error;

    fn try_from(r: NormalRepr) -> Result<Self> {
        let d = r.mean.len();
        if r.covariance.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: r.covariance.len(),
            });
        }
        let cov = DMatrix::from_row_slice(d, d, &r.covariance);
        let chol = covariance_cholesky(&cov).ok_or_else(|| {
            Error::InvalidConfig("stored covariance is not positive definite".into())
        })?;
        Ok(NormalClassModel::from_parts(r.label, r.prior, r.mean, cov, chol, r.ridge))
    }
}

impl From<NormalClassModel> for NormalRepr {
    fn from(m: NormalClassModel) -> Self {
        let d = m.mean.len();
        NormalRepr {
            label: m.label,
            prior: m.prior,
            covariance: (0..d * d).map(|k| m.covariance[(k / d, k % d)]).collect(),
            mean: m.mean,
            ridge: m.ridge,
        }
    }
}

/// Lower Cholesky factor, rejecting pivots that are not clearly positive
/// relative to the average variance.
fn covariance_cholesky(cov: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = cov.nrows();
    let scale = (cov.trace() / d as f64).abs().max(f64::MIN_POSITIVE);
    let l = nalgebra::Cholesky::new(cov.clone())?.unpack();
    if l.diagonal().iter().all(|v| v * v > 1e-14 * scale && v.is_finite()) {
        Some(l)
    } else {
        None
    }
}

impl NormalClassModel {
    fn from_parts(
        label: usize,
        prior: Probability,
        mean: Vec<f64>,
        covariance: DMatrix<f64>,
        chol: DMatrix<f64>,
        ridge: f64,
    ) -> Self {
        let logdet = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        NormalClassModel {
            label,
            prior,
            mean,
            covariance,
            chol,
            logdet,
            ridge,
        }
    }

    /// Fits mean and `1/N` covariance. When the covariance does not factor,
    /// a ridge of `1e-8 * trace / d` is added and grown tenfold until it does.
    pub fn fit(label: usize, prior: Probability, rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().ok_or(Error::Empty)?.len();
        if d == 0 {
            return Err(Error::Empty);
        }
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = DMatrix::<f64>::zeros(d, d);
        let mut centered = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                centered[j] = r[j] - mean[j];
            }
            for i in 0..d {
                for j in 0..=i {
                    cov[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] /= n as f64;
                cov[(j, i)] = cov[(i, j)];
            }
        }
        if let Some(chol) = covariance_cholesky(&cov) {
            return Ok(Self::from_parts(label, prior, mean, cov, chol, 0.0));
        }
        let trace = cov.trace();
        let mut ridge = if trace > 0.0 { 1e-8 * trace / d as f64 } else { 1e-8 };
        for _ in 0..30 {
            let mut reg = cov.clone();
            for i in 0..d {
                reg[(i, i)] += ridge;
            }
            if let Some(chol) = covariance_cholesky(&reg) {
                return Ok(Self::from_parts(label, prior, mean, reg, chol, ridge));
            }
            ridge *= 10.0;
        }
        Err(Error::RepairFailed(format!(
            "covariance of class {label} did not factor with ridge up to {ridge:e}"
        )))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Covariance actually used, including any ridge.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// `−½(x−μ)'Σ⁻¹(x−μ) − (d/2)ln 2π − ½ln|Σ| + ln P`.
    pub fn discriminant(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; d];
        let mut q = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for (k, yk) in y.iter().enumerate().take(i) {
                s -= self.chol[(i, k)] * yk;
            }
            y[i] = s / self.chol[(i, i)];
            q += y[i] * y[i];
        }
        Ok(-0.5 * q - 0.5 * d as f64 * LN_2PI - 0.5 * self.logdet + self.prior.get().ln())
    }
}

/// A trained classifier over `c ≥ 2` classes sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "ClassifierRepr")]
pub enum Classifier {
    Copula { classes: Vec<ClassModel> },
    Normal { classes: Vec<NormalClassModel> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ClassifierRepr {
    Copula { classes: Vec<ClassModel> },
    Normal { classes: Vec<NormalClassModel> },
}

impl TryFrom<ClassifierRepr> for Classifier {
    type Error = Error;

    fn try_from(r: ClassifierRepr) -> Result<Self> {
        let clf = match r {
            ClassifierRepr::Copula { classes } => Classifier::Copula { classes },
            ClassifierRepr::Normal { classes } => Classifier::Normal { classes },
        };
        clf.validate()?;
        Ok(clf)
    }
}

/// Accuracy and confusion counts; `confusion[i][j]` counts true class index
/// `i` predicted as class index `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: Probability,
    pub labels: Vec<usize>,
    pub confusion: Vec<Vec<usize>>,
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(g: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in g.iter().enumerate().skip(1) {
        if v > g[best] {
            best = i;
        }
    }
    best
}

impl Classifier {
    fn validate(&self) -> Result<()> {
        let (dims, priors, labels): (Vec<usize>, Vec<f64>, Vec<usize>) = match self {
            Classifier::Copula { classes } => (
                classes.iter().map(|c| c.dim()).collect(),
                classes.iter().map(|c| c.prior.get()).collect(),
                classes.iter().map(|c| c.label).collect(),
            ),
            Classifier::Normal { classes } => (
                classes.iter().map(|c| c.dim()).collect(),
                classes.iter().map(|c| c.prior.get()).collect(),
                classes.iter().map(|c| c.label).collect(),
            ),
        };
        if dims.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a classifier needs at least 2 classes, got {}",
                dims.len()
            )));
        }
        if let Some(&bad) = dims.iter().find(|&&d| d != dims[0]) {
            return Err(Error::DimensionMismatch {
                expected: dims[0],
                got: bad,
            });
        }
        if let Classifier::Copula { classes } = self {
            if let Some(c) = classes.iter().find(|c| c.copula.dim() != c.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: c.dim(),
                    got: c.copula.dim(),
                });
            }
        }
        if priors.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidConfig("class priors must be positive".into()));
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::InvalidConfig(format!("class priors sum to {sum}")));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("class labels must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Classifier::Copula { classes } => classes.len(),
            Classifier::Normal { classes } => classes.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Classifier::Copula { classes } => classes[0].dim(),
            Classifier::Normal { classes } => classes[0].dim(),
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        match self {
            Classifier::Copula { classes } => classes.iter().map(|c| c.label).collect(),
            Classifier::Normal { classes } => classes.iter().map(|c| c.label).collect(),
        }
    }

    pub fn priors(&self) -> Vec<f64> {
        match self {
            Classifier::Copula { classes } => classes.iter().map(|c| c.prior.get()).collect(),
            Classifier::Normal { classes } => classes.iter().map(|c| c.prior.get()).collect(),
        }
    }

    /// Same classifier with replaced priors (one per class, summing to 1).
    pub fn with_priors(&self, priors: &[f64]) -> Result<Self> {
        if priors.len() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes(),
                got: priors.len(),
            });
        }
        let probs = priors
            .iter()
            .map(|&p| Probability::new(p))
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        match &mut out {
            Classifier::Copula { classes } => {
                classes.iter_mut().zip(&probs).for_each(|(c, &p)| c.prior = p)
            }
            Classifier::Normal { classes } => {
                classes.iter_mut().zip(&probs).for_each(|(c, &p)| c.prior = p)
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// One discriminant value per class, in class order.
    pub fn discriminants(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Classifier::Copula { classes } => classes.iter().map(|c| c.discriminant(x)).collect(),
            Classifier::Normal { classes } => classes.iter().map(|c| c.discriminant(x)).collect(),
        }
    }

    /// Label of the largest discriminant.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        let g = self.discriminants(x)?;
        Ok(self.labels()[argmax(&g)])
    }

    /// Classifies rows in parallel; output order follows input order.
    pub fn classify_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.par_iter().map(|x| self.classify(x)).collect()
    }

    pub fn evaluate(&self, rows: &[Vec<f64>], labels: &[usize]) -> Result<Evaluation> {
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let known = self.labels();
        let index = |l: usize| known.iter().position(|&k| k == l).ok_or(Error::UnknownLabel(l));
        let truth = labels.iter().map(|&l| index(l)).collect::<Result<Vec<_>>>()?;
        let predicted = self.classify_batch(rows)?;
        let c = known.len();
        let mut confusion = vec![vec![0usize; c]; c];
        let mut correct = 0;
        for (&t, &p) in truth.iter().zip(&predicted) {
            let p = index(p)?;
            confusion[t][p] += 1;
            correct += usize::from(t == p);
        }
        Ok(Evaluation {
            accuracy: Probability::new(correct as f64 / rows.len() as f64)?,
            labels: known,
            confusion,
        })
    }
}

/// Rows grouped by label, labels ascending.
fn group_by_label<'a>(rows: &'a [Vec<f64>], labels: &[usize]) -> Result<BTreeMap<usize, Vec<&'a [f64]>>> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let d = rows.first().ok_or(Error::Empty)?.len();
    let mut groups: BTreeMap<usize, Vec<&[f64]>> = BTreeMap::new();
    for (r, &l) in rows.iter().zip(labels) {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        groups.entry(l).or_default().push(r);
    }
    if groups.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "training data must contain at least 2 classes, found {}",
            groups.len()
        )));
    }
    for g in groups.values() {
        if g.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: MIN_SAMPLES,
                got: g.len(),
            });
        }
    }
    Ok(groups)
}

fn priors_for(groups: &BTreeMap<usize, Vec<&[f64]>>, uniform: bool) -> Result<Vec<Probability>> {
    let total: usize = groups.values().map(Vec::len).sum();
    let c = groups.len() as f64;
    groups
        .values()
        .map(|g| {
            Probability::new(if uniform {
                1.0 / c
            } else {
                g.len() as f64 / total as f64
            })
        })
        .collect()
}

fn fit_class(
    label: usize,
    prior: Probability,
    rows: &[&[f64]],
    config: &CopulaConfig,
) -> Result<(ClassModel, FitReport)> {
    let d = rows[0].len();
    let owned: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let marginals = (0..d)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            Ok(match &config.marginals {
                MarginalMode::Empirical => Marginal::Empirical(fit_empirical(&col)?),
                MarginalMode::Parametric(families) => {
                    Marginal::Parametric(fit_parametric(families[j % families.len()], &col)?)
                }
            })
        })
        .collect::<Result<Vec<Marginal>>>()?;
    let report = match (config.copula, config.estimation) {
        (CopulaKind::Gaussian, Estimation::Eml) => {
            let pseudo: Vec<Vec<f64>> = owned
                .iter()
                .map(|x| {
                    x.iter()
                        .zip(&marginals)
                        .map(|(&v, m)| Ok(clamp_interior(m.cdf(v)?)))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?;
            eml_fit_gaussian(&pseudo)?
        }
        (CopulaKind::Gaussian, Estimation::Cml) => cml_fit_gaussian(&owned)?,
        (CopulaKind::StudentT, Estimation::Cml) => cml_fit_t(&owned)?,
        (CopulaKind::StudentT, Estimation::Eml) => unreachable!("rejected by validate"),
    };
    if !report.converged {
        log::warn!(
            "copula fit for class {label} stopped after {} iterations without converging",
            report.iterations
        );
    }
    let model = ClassModel {
        label,
        prior,
        marginals,
        copula: report.model.clone(),
    };
    Ok((model, report))
}

/// Trains one copula class model per label; classes are fitted in parallel.
pub fn train_copula_classifier(
    rows: &[Vec<f64>],
    labels: &[usize],
    config: &CopulaConfig,
) -> Result<Classifier> {
    train_copula_classifier_with_reports(rows, labels, config).map(|(clf, _)| clf)
}

/// Like [`train_copula_classifier`], also returning each class's copula fit
/// report in class order.
pub fn train_copula_classifier_with_reports(
    rows: &[Vec<f64>],
    labels: &[usize],
    config: &CopulaConfig,
) -> Result<(Classifier, Vec<FitReport>)> {
    config.validate()?;
    let groups = group_by_label(rows, labels)?;
    let priors = priors_for(&groups, config.uniform_priors)?;
    let work: Vec<(usize, Probability, &Vec<&[f64]>)> = groups
        .iter()
        .zip(priors)
        .map(|((&l, g), p)| (l, p, g))
        .collect();
    let (classes, reports): (Vec<ClassModel>, Vec<FitReport>) = work
        .par_iter()
        .map(|(l, p, g)| fit_class(*l, *p, g, config))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let clf = Classifier::Copula { classes };
    clf.validate()?;
    Ok((clf, reports))
}

/// Trains the multivariate-normal baseline.
pub fn train_normal_classifier(
    rows: &[Vec<f64>],
    labels: &[usize],
    uniform_priors: bool,
) -> Result<Classifier> {
    let groups = group_by_label(rows, labels)?;
    let priors = priors_for(&groups, uniform_priors)?;
    let classes = groups
        .iter()
        .zip(priors)
        .map(|((&l, g), p)| NormalClassModel::fit(l, p, g))
        .collect::<Result<Vec<_>>>()?;
    let clf = Classifier::Normal { classes };
    clf.validate()?;
    Ok(clf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::CorrelationMatrix;
    use crate::marginals::ParametricMarginal;

    fn prob(p: f64) -> Probability {
        Probability::new(p).unwrap()
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(argmax(&[3.0, 1.0]), 0);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
        assert_eq!(argmax(&[1.0, 5.0, 5.0]), 1);
        assert_eq!(argmax(&[3.0 + 7.5, 1.0 + 7.5]), 0);
    }

    fn normal_model(mean: Vec<f64>, cov: DMatrix<f64>, prior: f64) -> NormalClassModel {
        let chol = covariance_cholesky(&cov).unwrap();
        NormalClassModel::from_parts(0, prob(prior), mean, cov, chol, 0.0)
    }

    #[test]
    fn normal_discriminant_examples() {
        let m = normal_model(vec![0.0; 3], DMatrix::identity(3, 3), 1.0);
        let g = m.discriminant(&[0.0; 3]).unwrap();
        assert!((g + 1.5 * LN_2PI).abs() < 1e-14);
        let m = normal_model(vec![0.0], DMatrix::identity(1, 1), 1.0);
        let g = m.discriminant(&[1.0]).unwrap();
        assert!((g - (-0.5 - 0.5 * LN_2PI)).abs() < 1e-14);
    }

    #[test]
    fn normal_translation_invariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let a = normal_model(vec![1.0, -2.0], cov.clone(), 0.5);
        let b = normal_model(vec![4.0, 1.5], cov, 0.5);
        let ga = a.discriminant(&[0.2, 0.7]).unwrap();
        let gb = b.discriminant(&[3.2, 4.2]).unwrap();
        assert!((ga - gb).abs() < 1e-12);
    }

    #[test]
    fn normal_fit_mean_and_ridge() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| if i % 2 == 0 { vec![0.0, 0.0] } else { vec![2.0, 2.0] })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = NormalClassModel::fit(0, prob(1.0), &refs).unwrap();
        assert_eq!(m.mean(), &[1.0, 1.0]);
        // perfectly collinear columns need a ridge
        assert!(m.ridge() > 0.0);

        let constant: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 3.0]).collect();
        let refs: Vec<&[f64]> = constant.iter().map(|r| r.as_slice()).collect();
        let m = NormalClassModel::fit(0, prob(1.0), &refs).unwrap();
        assert!(m.ridge() > 0.0);
        assert!(m.discriminant(&[1.0, 3.0]).unwrap().is_finite());
    }

    #[test]
    fn identity_copula_reduces_to_naive_bayes() {
        let marginals: Vec<Marginal> = vec![
            ParametricMarginal::gamma(2.0, 1.0).unwrap().into(),
            ParametricMarginal::normal(0.0, 2.0).unwrap().into(),
        ];
        let model = ClassModel {
            label: 0,
            prior: prob(0.5),
            marginals: marginals.clone(),
            copula: CopulaModel::gaussian(CorrelationMatrix::identity(2)),
        };
        let x = [1.3, -0.4];
        let nb: f64 = marginals
            .iter()
            .zip(&x)
            .map(|(m, &v)| m.logpdf(v).unwrap())
            .sum::<f64>()
            + 0.5f64.ln();
        assert!((model.discriminant(&x).unwrap() - nb).abs() < 1e-14);
    }

    #[test]
    fn single_feature_copula_term_vanishes() {
        let m: Marginal = ParametricMarginal::exponential(0.7).unwrap().into();
        let model = ClassModel {
            label: 0,
            prior: prob(0.25),
            marginals: vec![m.clone()],
            copula: CopulaModel::student_t(CorrelationMatrix::identity(1), 5.0).unwrap(),
        };
        let g = model.discriminant(&[2.0]).unwrap();
        assert!((g - (m.logpdf(2.0).unwrap() + 0.25f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn out_of_support_values_are_floored() {
        let model = ClassModel {
            label: 0,
            prior: prob(1.0),
            marginals: vec![ParametricMarginal::log_normal(0.0, 1.0).unwrap().into()],
            copula: CopulaModel::gaussian(CorrelationMatrix::identity(1)),
        };
        assert_eq!(model.discriminant(&[-1.0]).unwrap(), DENSITY_FLOOR.ln());
    }

    #[test]
    fn config_rejects_t_with_eml() {
        let cfg = CopulaConfig {
            copula: CopulaKind::StudentT,
            ..CopulaConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn training_needs_two_classes() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels = vec![0; 10];
        assert!(train_normal_classifier(&rows, &labels, false).is_err());
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        assert!(matches!(
            train_normal_classifier(&rows, &labels, false),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
