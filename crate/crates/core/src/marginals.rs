//! Univariate marginals: parametric families and the empirical marginal.
//!
//! The empirical cdf is the step function `#{x_i <= x} / N`, rescaled by
//! `N / (N + 1)` so it never reaches 0 or 1 and normal / t quantiles of it
//! stay finite. The empirical density is obtained by smoothing that cdf on a
//! uniform grid with a Gaussian kernel and taking central differences.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optimize::golden_section_max;
use crate::specfn;

/// Smallest density an empirical marginal will report.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Number of grid points carrying the empirical log-density.
pub const GRID_POINTS: usize = 512;
/// Minimum sample size for fitting any marginal.
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Normal,
    StudentT,
    Gamma,
    Exponential,
    LogNormal,
    ChiSquare,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(FamilyKind::Normal),
            "t" | "student_t" | "studentt" => Ok(FamilyKind::StudentT),
            "gamma" => Ok(FamilyKind::Gamma),
            "exp" | "exponential" => Ok(FamilyKind::Exponential),
            "lognormal" | "log_normal" => Ok(FamilyKind::LogNormal),
            "chisq" | "chi_square" | "chisquare" => Ok(FamilyKind::ChiSquare),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }
}

/// A parametric univariate distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ParametricMarginal {
    Normal { mean: f64, sd: f64 },
    /// Standard Student's t.
    StudentT { nu: f64 },
    Gamma { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    /// Parameters of the underlying normal of `ln x`.
    LogNormal { mu: f64, sigma: f64 },
    /// Gamma(k/2, 2), also for non-integer `k`.
    ChiSquare { k: f64 },
}

impl ParametricMarginal {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        ParametricMarginal::Normal { mean, sd }.validated()
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        ParametricMarginal::StudentT { nu }.validated()
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        ParametricMarginal::Gamma { shape, scale }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        ParametricMarginal::Exponential { rate }.validated()
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        ParametricMarginal::LogNormal { mu, sigma }.validated()
    }

    pub fn chi_square(k: f64) -> Result<Self> {
        ParametricMarginal::ChiSquare { k }.validated()
    }

    /// Checks family parameter constraints.
    pub fn validated(self) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(domain(
                    "ParametricMarginal",
                    format!("{name} = {v} must be positive and finite"),
                ))
            }
        };
        match self {
            ParametricMarginal::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(domain("ParametricMarginal", "mean must be finite"));
                }
                positive("sd", sd)?
            }
            ParametricMarginal::StudentT { nu } => positive("nu", nu)?,
            ParametricMarginal::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?
            }
            ParametricMarginal::Exponential { rate } => positive("rate", rate)?,
            ParametricMarginal::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(domain("ParametricMarginal", "mu must be finite"));
                }
                positive("sigma", sigma)?
            }
            ParametricMarginal::ChiSquare { k } => positive("k", k)?,
        }
        Ok(self)
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            ParametricMarginal::Normal { .. } => FamilyKind::Normal,
            ParametricMarginal::StudentT { .. } => FamilyKind::StudentT,
            ParametricMarginal::Gamma { .. } => FamilyKind::Gamma,
            ParametricMarginal::Exponential { .. } => FamilyKind::Exponential,
            ParametricMarginal::LogNormal { .. } => FamilyKind::LogNormal,
            ParametricMarginal::ChiSquare { .. } => FamilyKind::ChiSquare,
        }
    }

    /// Whether `x` lies in the (closed) support.
    pub fn in_support(&self, x: f64) -> bool {
        match self {
            ParametricMarginal::Normal { .. } | ParametricMarginal::StudentT { .. } => {
                x.is_finite()
            }
            ParametricMarginal::LogNormal { .. } => x > 0.0 && x.is_finite(),
            _ => x >= 0.0 && x.is_finite(),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match *self {
            ParametricMarginal::Normal { mean, sd } => Ok(specfn::normal_cdf((x - mean) / sd)),
            ParametricMarginal::StudentT { nu } => specfn::student_t_cdf(x, nu),
            ParametricMarginal::Gamma { shape, scale } => specfn::gamma_cdf(x, shape, scale),
            ParametricMarginal::Exponential { rate } => specfn::exponential_cdf(x, rate),
            ParametricMarginal::LogNormal { mu, sigma } => specfn::lognormal_cdf(x, mu, sigma),
            ParametricMarginal::ChiSquare { k } => specfn::chi_square_cdf(x, k),
        }
    }

    pub fn logpdf(&self, x: f64) -> Result<f64> {
        match *self {
            ParametricMarginal::Normal { mean, sd } => {
                if !x.is_finite() {
                    return Err(domain("normal_logpdf", format!("x = {x} is not finite")));
                }
                Ok(specfn::normal_logpdf((x - mean) / sd) - sd.ln())
            }
            ParametricMarginal::StudentT { nu } => specfn::student_t_logpdf(x, nu),
            ParametricMarginal::Gamma { shape, scale } => specfn::gamma_logpdf(x, shape, scale),
            ParametricMarginal::Exponential { rate } => specfn::exponential_logpdf(x, rate),
            ParametricMarginal::LogNormal { mu, sigma } => {
                specfn::lognormal_logpdf(x, mu, sigma)
            }
            ParametricMarginal::ChiSquare { k } => specfn::chi_square_logpdf(x, k),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        match *self {
            ParametricMarginal::Normal { mean, sd } => {
                Ok(mean + sd * specfn::normal_quantile(p)?)
            }
            ParametricMarginal::StudentT { nu } => specfn::student_t_quantile(p, nu),
            ParametricMarginal::Gamma { shape, scale } => specfn::gamma_quantile(p, shape, scale),
            ParametricMarginal::Exponential { rate } => specfn::exponential_quantile(p, rate),
            ParametricMarginal::LogNormal { mu, sigma } => {
                specfn::lognormal_quantile(p, mu, sigma)
            }
            ParametricMarginal::ChiSquare { k } => specfn::chi_square_quantile(p, k),
        }
    }
}

/// Raw empirical cdf, `#{x_i <= x} / N`.
pub fn ecdf_raw(samples: &[f64], x: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let count = samples.iter().filter(|&&s| s <= x).count();
    Ok(count as f64 / samples.len() as f64)
}

/// Empirical marginal with a smoothed, grid-interpolated density.
///
/// The sorted samples are the knots of the cdf; the log-density lives on a
/// uniform grid of [`GRID_POINTS`] points spanning `[min - h, max + h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMarginal {
    sorted_samples: Vec<f64>,
    grid_start: f64,
    grid_step: f64,
    logpdf_grid: Vec<f64>,
    bandwidth: f64,
    density_floor: f64,
}

impl EmpiricalMarginal {
    pub fn fit(samples: &[f64]) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: MIN_SAMPLES,
                got: samples.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(domain("fit_empirical", format!("non-finite sample {bad}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let mut h = 1.06 * var.sqrt() * n.powf(-0.2);
        if !(h > 0.0) {
            // constant sample
            h = 1e-6 * mean.abs().max(1.0);
        }
        let lo = sorted[0] - h;
        let hi = sorted[sorted.len() - 1] + h;
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;

        let mut marginal = EmpiricalMarginal {
            sorted_samples: sorted,
            grid_start: lo,
            grid_step: step,
            logpdf_grid: Vec::new(),
            bandwidth: h,
            density_floor: DENSITY_FLOOR,
        };

        // Smoothed cdf S at grid indices -1..=GRID_POINTS.
        let radius = (4.0 * h / step).ceil() as i64;
        let weights: Vec<f64> = (-radius..=radius)
            .map(|k| (-0.5 * (k as f64 * step / h).powi(2)).exp())
            .collect();
        let wsum: f64 = weights.iter().sum();
        let smoothed: Vec<f64> = (-1..=GRID_POINTS as i64)
            .map(|i| {
                weights
                    .iter()
                    .zip(-radius..=radius)
                    .map(|(w, k)| w * marginal.cdf(lo + (i + k) as f64 * step))
                    .sum::<f64>()
                    / wsum
            })
            .collect();
        marginal.logpdf_grid = smoothed
            .windows(3)
            .map(|w| ((w[2] - w[0]) / (2.0 * step)).max(DENSITY_FLOOR).ln())
            .collect();
        debug_assert_eq!(marginal.logpdf_grid.len(), GRID_POINTS);
        Ok(marginal)
    }

    pub fn len(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_samples.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `(x, ln f(x))` pairs of the density grid.
    pub fn logpdf_grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.logpdf_grid
            .iter()
            .enumerate()
            .map(|(i, &l)| (self.grid_start + i as f64 * self.grid_step, l))
    }

    /// Rescaled step cdf, clamped to `[1/(N+1), N/(N+1)]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.sorted_samples.len();
        let count = self.sorted_samples.partition_point(|&s| s <= x);
        let denom = (n + 1) as f64;
        (count.clamp(1, n)) as f64 / denom
    }

    /// Linear interpolation of the log-density grid; `ln(density_floor)`
    /// outside it.
    pub fn logpdf(&self, x: f64) -> f64 {
        let floor = self.density_floor.ln();
        if x.is_nan() {
            return floor;
        }
        let pos = (x - self.grid_start) / self.grid_step;
        let last = (self.logpdf_grid.len() - 1) as f64;
        if !(0.0..=last).contains(&pos) {
            return floor;
        }
        let i = (pos.floor() as usize).min(self.logpdf_grid.len() - 2);
        let t = pos - i as f64;
        ((1.0 - t) * self.logpdf_grid[i] + t * self.logpdf_grid[i + 1]).max(floor)
    }

    /// Generalized inverse of the rescaled step cdf.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain("empirical quantile", format!("p = {p} must lie in (0, 1)")));
        }
        let n = self.sorted_samples.len();
        let k = (p * (n + 1) as f64 - 1e-9).ceil() as usize;
        Ok(self.sorted_samples[k.clamp(1, n) - 1])
    }
}

/// A fitted univariate marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Marginal {
    Parametric(ParametricMarginal),
    Empirical(EmpiricalMarginal),
}

impl Marginal {
    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Marginal::Parametric(p) => p.cdf(x),
            Marginal::Empirical(e) => Ok(e.cdf(x)),
        }
    }

    pub fn logpdf(&self, x: f64) -> Result<f64> {
        match self {
            Marginal::Parametric(p) => p.logpdf(x),
            Marginal::Empirical(e) => Ok(e.logpdf(x)),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        match self {
            Marginal::Parametric(m) => m.quantile(p),
            Marginal::Empirical(e) => e.quantile(p),
        }
    }

    /// Number of samples behind an empirical marginal.
    pub fn sample_count(&self) -> Option<usize> {
        match self {
            Marginal::Parametric(_) => None,
            Marginal::Empirical(e) => Some(e.len()),
        }
    }
}

impl From<ParametricMarginal> for Marginal {
    fn from(p: ParametricMarginal) -> Self {
        Marginal::Parametric(p)
    }
}

impl From<EmpiricalMarginal> for Marginal {
    fn from(e: EmpiricalMarginal) -> Self {
        Marginal::Empirical(e)
    }
}

pub fn fit_empirical(samples: &[f64]) -> Result<EmpiricalMarginal> {
    EmpiricalMarginal::fit(samples)
}

/// Maximum-likelihood fit of a parametric family (population conventions).
pub fn fit_parametric(kind: FamilyKind, samples: &[f64]) -> Result<ParametricMarginal> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let support_violation = |x: f64| {
        domain(
            "fit_parametric",
            format!("sample {x} is outside the support of {kind:?}"),
        )
    };
    let check = |ok: fn(f64) -> bool| -> Result<()> {
        match samples.iter().find(|&&x| !ok(x)) {
            Some(&x) => Err(support_violation(x)),
            None => Ok(()),
        }
    };
    let mean_var = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        (m, var)
    };
    match kind {
        FamilyKind::Normal => {
            check(f64::is_finite)?;
            let (m, var) = mean_var(&mut samples.iter().copied());
            ParametricMarginal::normal(m, var.sqrt())
        }
        FamilyKind::Exponential => {
            check(|x| x >= 0.0 && x.is_finite())?;
            let m = samples.iter().sum::<f64>() / n;
            ParametricMarginal::exponential(1.0 / m)
        }
        FamilyKind::LogNormal => {
            check(|x| x > 0.0 && x.is_finite())?;
            let (m, var) = mean_var(&mut samples.iter().map(|x| x.ln()));
            ParametricMarginal::log_normal(m, var.sqrt())
        }
        FamilyKind::Gamma => {
            check(|x| x > 0.0 && x.is_finite())?;
            let m = samples.iter().sum::<f64>() / n;
            let mean_ln = samples.iter().map(|x| x.ln()).sum::<f64>() / n;
            let s = m.ln() - mean_ln;
            if !(s > 0.0) {
                return Err(domain("fit_parametric", "gamma fit needs non-constant samples"));
            }
            // Solve ln k - ψ(k) = s by Newton, starting from Minka's approximation.
            let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
            let mut last_change = f64::INFINITY;
            for _ in 0..100 {
                let g = k.ln() - specfn::digamma(k) - s;
                let dg = 1.0 / k - specfn::trigamma(k);
                let next = (k - g / dg).max(0.5 * k);
                last_change = (next - k).abs();
                k = next;
                if last_change <= 1e-12 * k {
                    return ParametricMarginal::gamma(k, m / k);
                }
            }
            Err(Error::NoConvergence {
                method: "gamma shape Newton",
                iterations: 100,
                last_change,
            })
        }
        FamilyKind::ChiSquare => {
            check(|x| x > 0.0 && x.is_finite())?;
            // ψ(k/2) = mean(ln x) - ln 2
            let target = samples.iter().map(|x| x.ln()).sum::<f64>() / n - 2f64.ln();
            let m = samples.iter().sum::<f64>() / n;
            let mut a = (0.5 * m).max(1e-3);
            let mut last_change = f64::INFINITY;
            for _ in 0..200 {
                let g = specfn::digamma(a) - target;
                let next = (a - g / specfn::trigamma(a)).max(0.5 * a);
                last_change = (next - a).abs();
                a = next;
                if last_change <= 1e-12 * a {
                    return ParametricMarginal::chi_square(2.0 * a);
                }
            }
            Err(Error::NoConvergence {
                method: "chi-square dof Newton",
                iterations: 200,
                last_change,
            })
        }
        FamilyKind::StudentT => {
            check(f64::is_finite)?;
            let loglik = |ln_nu: f64| {
                let nu = ln_nu.exp();
                samples
                    .iter()
                    .map(|&x| specfn::student_t_logpdf_unchecked(x, nu))
                    .sum::<f64>()
            };
            let best = golden_section_max(
                loglik,
                0.05f64.ln(),
                1000f64.ln(),
                |a, b| b.exp() - a.exp() < 1e-4 * a.exp().max(1.0),
                200,
            );
            if !best.converged {
                return Err(Error::NoConvergence {
                    method: "student t dof search",
                    iterations: best.iterations,
                    last_change: f64::NAN,
                });
            }
            ParametricMarginal::student_t(best.x.exp())
        }
    }
}
