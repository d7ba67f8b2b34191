//! Copula parameter estimation: closed-form Gaussian fit on normal scores,
//! the t copula likelihood, and rank-based calibration of the t copula.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{
    gaussian_logdensity_zeta, make_correlation, t_constant, t_logdensity_zeta, CopulaModel,
    CorrelationMatrix, NU_MAX,
};
use crate::error::{Error, Result};
use crate::marginals::MIN_SAMPLES;
use crate::optimize::golden_section_max;
use crate::specfn;

/// Absolute tolerance on ν for the degrees-of-freedom search.
pub const NU_TOL: f64 = 1e-3;
/// Iteration cap for the degrees-of-freedom search.
pub const NU_MAX_ITER: usize = 200;
/// Smallest ν probed by the search; the domain is open at 2.
const NU_MIN_OFFSET: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimation {
    /// Closed-form maximum likelihood on the marginal-transformed sample.
    Eml,
    /// Rank transform plus Kendall's τ correlation, then a 1-D search for ν.
    Cml,
}

impl std::str::FromStr for Estimation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eml" => Ok(Estimation::Eml),
            "cml" => Ok(Estimation::Cml),
            other => Err(Error::InvalidConfig(format!("unknown estimation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: CopulaModel,
    /// Sum of per-sample copula log-densities under `model`.
    pub loglik: f64,
    pub iterations: usize,
    /// Whether the correlation estimate needed nearest-PD repair.
    pub repaired: bool,
    pub converged: bool,
}

fn columns(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = samples.first().ok_or(Error::Empty)?.len();
    if let Some(row) = samples.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }
    Ok((0..d)
        .map(|j| samples.iter().map(|r| r[j]).collect())
        .collect())
}

/// Average-rank pseudo-observations `rank / (N + 1)` of one column.
pub fn pseudo_observations(column: &[f64]) -> Result<Vec<f64>> {
    if column.is_empty() {
        return Err(Error::Empty);
    }
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[order[end]] == column[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their average
        let rank = 0.5 * ((start + 1) + end) as f64;
        for &i in &order[start..end] {
            out[i] = rank / (n + 1) as f64;
        }
        start = end;
    }
    Ok(out)
}

/// Column-wise rank transform of an `N × d` sample.
pub fn empirical_transform(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let cols = columns(samples)?
        .iter()
        .map(|c| pseudo_observations(c))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..samples.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}

fn check_interior(pseudo: &[Vec<f64>]) -> Result<usize> {
    let d = pseudo.first().ok_or(Error::Empty)?.len();
    for (row, u) in pseudo.iter().enumerate() {
        if u.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: u.len(),
            });
        }
        if let Some(col) = u.iter().position(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Boundary {
                row,
                col,
                value: u[col],
            });
        }
    }
    Ok(d)
}

/// Gaussian copula fit from the normal-score moment matrix, rescaled to unit
/// diagonal.
pub fn eml_fit_gaussian(pseudo: &[Vec<f64>]) -> Result<FitReport> {
    let d = check_interior(pseudo)?;
    let n = pseudo.len();
    if n <= d {
        warn!("fitting a {d}-dimensional Gaussian copula from only {n} samples");
    }
    let zeta: Vec<Vec<f64>> = pseudo
        .iter()
        .map(|u| u.iter().map(|&p| specfn::normal_quantile_unchecked(p)).collect())
        .collect();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for z in &zeta {
        for i in 0..d {
            for j in 0..=i {
                m[(i, j)] += z[i] * z[j];
            }
        }
    }
    for j in 0..d {
        if !(m[(j, j)] > 0.0) {
            return Err(Error::DegenerateColumn(j));
        }
    }
    let scale: Vec<f64> = (0..d).map(|i| m[(i, i)].sqrt().recip()).collect();
    let corr = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = if i > j { (i, j) } else { (j, i) };
            m[(a, b)] * scale[a] * scale[b]
        }
    });
    let rho = make_correlation(&corr)?;
    let loglik = sum_ordered(zeta.par_iter().map(|z| gaussian_logdensity_zeta(z, &rho)));
    Ok(FitReport {
        repaired: rho.was_repaired(),
        model: CopulaModel::gaussian(rho),
        loglik,
        iterations: 0,
        converged: true,
    })
}

/// Sums a parallel stream in index order so results do not depend on the
/// thread schedule.
fn sum_ordered<I: IndexedParallelIterator<Item = f64>>(it: I) -> f64 {
    it.collect::<Vec<f64>>().iter().sum()
}

/// The pseudo-sample with every value replaced by an index into the sorted
/// list of its distinct values, so quantiles are computed once per value.
struct ScoreCache {
    values: Vec<f64>,
    index: Vec<Vec<usize>>,
}

impl ScoreCache {
    fn new(pseudo: &[Vec<f64>]) -> Self {
        let mut values: Vec<f64> = pseudo.iter().flatten().copied().collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let index = pseudo
            .iter()
            .map(|u| {
                u.iter()
                    .map(|v| values.binary_search_by(|x| x.total_cmp(v)).expect("present"))
                    .collect()
            })
            .collect();
        ScoreCache { values, index }
    }

    fn t_loglik(&self, rho: &CorrelationMatrix, nu: f64) -> f64 {
        let scores: Vec<f64> = self
            .values
            .par_iter()
            .map(|&p| specfn::student_t_quantile_unchecked(p, nu))
            .collect();
        let constant = t_constant(nu, rho.dim());
        sum_ordered(self.index.par_iter().map(|idx| {
            let zeta: Vec<f64> = idx.iter().map(|&k| scores[k]).collect();
            t_logdensity_zeta(&zeta, rho, nu, constant)
        }))
    }
}

/// Sum of t copula log-densities over the pseudo-sample.
pub fn t_loglik(pseudo: &[Vec<f64>], rho: &CorrelationMatrix, nu: f64) -> Result<f64> {
    let d = check_interior(pseudo)?;
    if d != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: d,
        });
    }
    if !(nu > 2.0 && nu.is_finite()) {
        return Err(crate::error::domain(
            "t_loglik",
            format!("nu = {nu} must be finite and > 2"),
        ));
    }
    Ok(ScoreCache::new(pseudo).t_loglik(rho, nu))
}

/// Kendall's τ-a by direct enumeration of all pairs; ties count as neither
/// concordant nor discordant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]) * (y[i] - y[j]);
            s += if a > 0.0 {
                1
            } else if a < 0.0 {
                -1
            } else {
                0
            };
        }
    }
    Ok(s as f64 / (n * (n - 1) / 2) as f64)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: x.len(),
        });
    }
    Ok(())
}

/// Same statistic as [`kendall_tau`] in O(n log n), counting discordant
/// pairs as merge-sort inversions.
pub fn kendall_tau_fast(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let tied_pairs = |same: &dyn Fn(usize, usize) -> bool| -> u64 {
        let mut total = 0u64;
        let mut run = 1u64;
        for k in 1..n {
            if same(order[k - 1], order[k]) {
                run += 1;
            } else {
                total += run * (run - 1) / 2;
                run = 1;
            }
        }
        total + run * (run - 1) / 2
    };
    let x_ties = tied_pairs(&|a, b| x[a] == x[b]);
    let xy_ties = tied_pairs(&|a, b| x[a] == x[b] && y[a] == y[b]);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    let swaps = count_inversions(&mut ys, &mut buf);

    let mut y_ties = 0u64;
    let mut run = 1u64;
    for k in 1..n {
        if ys[k - 1] == ys[k] {
            run += 1;
        } else {
            y_ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    y_ties += run * (run - 1) / 2;

    let total = (n as u64) * (n as u64 - 1) / 2;
    let diff = total as i64 - x_ties as i64 - y_ties as i64 + xy_ties as i64 - 2 * swaps as i64;
    Ok(diff as f64 / total as f64)
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..].copy_from_slice(&v[j..]);
    v.copy_from_slice(buf);
    count
}

/// Pairwise Kendall's τ between the columns of an `N × d` sample.
pub fn kendall_tau_matrix(samples: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = columns(samples)?;
    let d = cols.len();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let taus = pairs
        .par_iter()
        .map(|&(i, j)| kendall_tau_fast(&cols[i], &cols[j]))
        .collect::<Result<Vec<f64>>>()?;
    let mut m = DMatrix::identity(d, d);
    for (&(i, j), &t) in pairs.iter().zip(&taus) {
        m[(i, j)] = t;
        m[(j, i)] = t;
    }
    Ok(m)
}

/// Correlation from Kendall's τ via `sin(πτ/2)`, repaired if indefinite.
pub fn tau_correlation(samples: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    let tau = kendall_tau_matrix(samples)?;
    let rho = tau.map(|t| (0.5 * PI * t).sin());
    make_correlation(&rho)
}

/// Rank-based t copula calibration: rank transform, τ correlation, then a
/// golden-section search for ν over `(2, NU_MAX]` on `ln(ν - 2)`.
///
/// Non-convergence is reported through `converged = false` with the best
/// value found.
pub fn cml_fit_t(samples: &[Vec<f64>]) -> Result<FitReport> {
    let pseudo = empirical_transform(samples)?;
    let rho = tau_correlation(samples)?;
    fit_nu(&pseudo, rho)
}

/// ν search for a fixed correlation matrix.
pub fn fit_nu(pseudo: &[Vec<f64>], rho: CorrelationMatrix) -> Result<FitReport> {
    let d = check_interior(pseudo)?;
    if d != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: d,
        });
    }
    let cache = ScoreCache::new(pseudo);
    let best = golden_section_max(
        |s| cache.t_loglik(&rho, 2.0 + s.exp()),
        NU_MIN_OFFSET.ln(),
        (NU_MAX - 2.0).ln(),
        |a, b| b.exp() - a.exp() < NU_TOL,
        NU_MAX_ITER,
    );
    let nu = (2.0 + best.x.exp()).min(NU_MAX);
    let repaired = rho.was_repaired();
    let model = CopulaModel::student_t(rho, nu)?;
    let loglik = if nu >= NU_MAX {
        // evaluated as the Gaussian limit
        model_loglik(&model, pseudo)?
    } else {
        best.value
    };
    Ok(FitReport {
        model,
        loglik,
        iterations: best.iterations,
        repaired,
        converged: best.converged,
    })
}

/// Gaussian copula with the τ-based correlation on the rank transform.
pub fn cml_fit_gaussian(samples: &[Vec<f64>]) -> Result<FitReport> {
    let pseudo = empirical_transform(samples)?;
    let rho = tau_correlation(samples)?;
    let model = CopulaModel::gaussian(rho);
    Ok(FitReport {
        repaired: model.rho().was_repaired(),
        loglik: model_loglik(&model, &pseudo)?,
        model,
        iterations: 0,
        converged: true,
    })
}

/// Sum of `model.logdensity` over the pseudo-sample.
pub fn model_loglik(model: &CopulaModel, pseudo: &[Vec<f64>]) -> Result<f64> {
    let per = pseudo
        .par_iter()
        .map(|u| model.logdensity(u))
        .collect::<Result<Vec<f64>>>()?;
    Ok(per.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pseudo_observation_examples() {
        assert_eq!(pseudo_observations(&[3.0, 1.0, 2.0]).unwrap(), vec![0.75, 0.25, 0.5]);
        assert_eq!(pseudo_observations(&[5.0, 5.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn empirical_transform_needs_eight_rows() {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        assert!(matches!(
            empirical_transform(&rows),
            Err(Error::TooFewSamples { needed: 8, got: 7 })
        ));
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64, -(i as f64)]).collect();
        let u = empirical_transform(&rows).unwrap();
        assert_eq!(u[8][0], 0.9);
        assert_eq!(u[0][1], 0.9);
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(kendall_tau(&x, &neg).unwrap(), -1.0);
        let t = kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn eml_single_row_is_repaired() {
        let u = specfn::normal_cdf(1.0);
        let fit = eml_fit_gaussian(&[vec![u, u]]).unwrap();
        assert!(fit.repaired);
        assert!(fit.model.rho().get(0, 1) < 1.0);
    }

    #[test]
    fn eml_rejects_boundary() {
        let e = eml_fit_gaussian(&[vec![0.5, 0.2], vec![0.3, 1.0]]).unwrap_err();
        assert_eq!(
            e,
            Error::Boundary {
                row: 1,
                col: 1,
                value: 1.0
            }
        );
    }

    #[test]
    fn t_loglik_examples() {
        let id = CorrelationMatrix::identity(2);
        let v = t_loglik(&[vec![0.5, 0.5]], &id, 5.0).unwrap();
        assert!((v - 0.09936).abs() < 1e-5);
        let v = t_loglik(&[vec![0.5, 0.5], vec![0.5, 0.5]], &id, NU_MAX).unwrap();
        assert!(v.abs() < 1e-3);
    }

    #[test]
    fn comonotone_pair_is_repaired() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, i as f64]).collect();
        assert_eq!(kendall_tau_matrix(&rows).unwrap()[(0, 1)], 1.0);
        let fit = cml_fit_t(&rows).unwrap();
        assert!(fit.repaired);
        assert!(fit.model.rho().get(0, 1) < 1.0);
    }

    proptest! {
        #[test]
        fn fast_tau_matches_brute_force(
            pairs in prop::collection::vec((-5i32..5, -5i32..5), 2..50)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            prop_assert_eq!(kendall_tau_fast(&x, &y).unwrap(), kendall_tau(&x, &y).unwrap());
        }

        #[test]
        fn tau_invariant_under_increasing_maps(
            pairs in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 2..50)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            let gy: Vec<f64> = y.iter().map(|v| (v / 50.0).exp()).collect();
            prop_assert_eq!(kendall_tau(&fx, &gy).unwrap(), kendall_tau(&x, &y).unwrap());
        }
    }
}
