//! Copula-based Bayesian discriminant classifiers.
//!
//! Class-conditional densities are decomposed into a copula (Gaussian or
//! Student's t) and per-feature marginals (parametric or empirical). The
//! classical multivariate-normal quadratic discriminant is provided as a
//! baseline, together with a seeded generator for non-Gaussian benchmark
//! datasets.

pub mod classifier;
pub mod copula;
pub mod datagen;
pub mod error;
pub mod estimation;
pub mod marginals;
mod optimize;
pub mod specfn;

pub use error::{Error, Result};
pub use specfn::Probability;

pub use classifier::{
    train_copula_classifier, train_copula_classifier_with_reports, train_normal_classifier, ClassModel, Classifier, CopulaConfig,
    Evaluation, MarginalMode, NormalClassModel,
};
pub use copula::{CopulaKind, CopulaModel, CorrelationMatrix};
pub use datagen::{generate, table1_preset, Dataset, DatasetSpec};
pub use estimation::{Estimation, FitReport};
pub use marginals::{EmpiricalMarginal, FamilyKind, Marginal, ParametricMarginal};
