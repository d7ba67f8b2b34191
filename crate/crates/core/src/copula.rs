//! Gaussian and Student's t copulas over a validated correlation matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfn;

/// Symmetry and unit-diagonal tolerance accepted by [`make_correlation`].
pub const ENTRY_TOL: f64 = 1e-10;
/// Smallest Cholesky pivot (Schur complement) accepted as positive definite.
pub const MIN_PIVOT: f64 = 1e-10;
/// Eigenvalue floor used by the nearest positive-definite repair.
pub const EIGEN_FLOOR: f64 = 1e-8;
/// Degrees of freedom at or above which a t copula is evaluated as Gaussian.
pub const NU_MAX: f64 = 1000.0;

/// A symmetric positive-definite matrix with unit diagonal, together with
/// its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationRepr", into = "CorrelationRepr")]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    chol: DMatrix<f64>,
    logdet: f64,
    repaired: bool,
}

#[derive(Serialize, Deserialize)]
struct CorrelationRepr {
    dim: usize,
    /// Row-major full matrix.
    entries: Vec<f64>,
    #[serde(default)]
    repaired: bool,
}

impl TryFrom<CorrelationRepr> for CorrelationMatrix {
    type Error = Error;

    fn try_from(r: CorrelationRepr) -> Result<Self> {
        if r.entries.len() != r.dim * r.dim {
            return Err(Error::DimensionMismatch {
                expected: r.dim * r.dim,
                got: r.entries.len(),
            });
        }
        let mut m = make_correlation(&DMatrix::from_row_slice(r.dim, r.dim, &r.entries))?;
        m.repaired |= r.repaired;
        Ok(m)
    }
}

impl From<CorrelationMatrix> for CorrelationRepr {
    fn from(m: CorrelationMatrix) -> Self {
        let d = m.dim();
        CorrelationRepr {
            dim: d,
            entries: (0..d * d).map(|k| m.entries[(k / d, k % d)]).collect(),
            repaired: m.repaired,
        }
    }
}

/// Validates, factorizes and, when factorization fails, repairs a
/// correlation matrix.
pub fn make_correlation(entries: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let (rows, cols) = entries.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(Error::Empty);
    }
    let d = rows;
    for i in 0..d {
        if (entries[(i, i)] - 1.0).abs() > ENTRY_TOL {
            return Err(Error::NotCorrelation(format!(
                "diagonal entry {i} is {}",
                entries[(i, i)]
            )));
        }
        for j in 0..i {
            let (a, b) = (entries[(i, j)], entries[(j, i)]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NotCorrelation(format!("entry ({i}, {j}) is not finite")));
            }
            if (a - b).abs() > ENTRY_TOL {
                return Err(Error::NotCorrelation(format!(
                    "entries ({i}, {j}) = {a} and ({j}, {i}) = {b} differ"
                )));
            }
        }
    }
    let mut clean = entries.clone();
    symmetrize_unit_diagonal(&mut clean);
    if let Some(chol) = cholesky(&clean) {
        return Ok(CorrelationMatrix::from_parts(clean, chol, false));
    }
    let repaired = nearest_pd(&clean)?;
    match cholesky(&repaired) {
        Some(chol) => Ok(CorrelationMatrix::from_parts(repaired, chol, true)),
        None => Err(Error::RepairFailed(
            "matrix still not positive definite after eigenvalue clipping".into(),
        )),
    }
}

fn symmetrize_unit_diagonal(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        m[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Lower Cholesky factor, or `None` if any pivot falls below [`MIN_PIVOT`].
fn cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = a.nrows();
    let mut l = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > MIN_PIVOT) {
            return None;
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..d {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Clips eigenvalues at [`EIGEN_FLOOR`], reconstructs and rescales to unit
/// diagonal.
fn nearest_pd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::RepairFailed("eigendecomposition produced non-finite values".into()));
    }
    let clipped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let v = &eig.eigenvectors;
    let mut m = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let d = m.nrows();
    let scale: Vec<f64> = (0..d).map(|i| m[(i, i)].sqrt().recip()).collect();
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] *= scale[i] * scale[j];
        }
    }
    symmetrize_unit_diagonal(&mut m);
    Ok(m)
}

impl CorrelationMatrix {
    fn from_parts(entries: DMatrix<f64>, chol: DMatrix<f64>, repaired: bool) -> Self {
        let logdet = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        CorrelationMatrix {
            entries,
            chol,
            logdet,
            repaired,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_parts(DMatrix::identity(d, d), DMatrix::identity(d, d), false)
    }

    /// All off-diagonal entries equal to `r`.
    pub fn exchangeable(d: usize, r: f64) -> Result<Self> {
        let mut m = DMatrix::from_element(d, d, r);
        m.fill_diagonal(1.0);
        make_correlation(&m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::NotSquare {
                rows: d,
                cols: bad.len(),
            });
        }
        make_correlation(&DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Lower-triangular Cholesky factor.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Whether the nearest positive-definite repair was applied.
    pub fn was_repaired(&self) -> bool {
        self.repaired
    }

    /// `z' ρ⁻¹ z` by forward substitution against the Cholesky factor.
    pub fn quad_form(&self, z: &[f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(z.len(), d);
        let mut y = vec![0.0; d];
        let mut q = 0.0;
        for i in 0..d {
            let mut s = z[i];
            for (k, yk) in y.iter().enumerate().take(i) {
                s -= self.chol[(i, k)] * yk;
            }
            y[i] = s / self.chol[(i, i)];
            q += y[i] * y[i];
        }
        q
    }

    /// `L g` for the lower Cholesky factor `L`.
    pub fn mul_chol(&self, g: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..=i).map(|k| self.chol[(i, k)] * g[k]).sum())
            .collect()
    }

    /// Rows and columns reordered so that new index `i` is old index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let d = self.dim();
        if perm.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: perm.len(),
            });
        }
        make_correlation(&DMatrix::from_fn(d, d, |i, j| self.entries[(perm[i], perm[j])]))
    }
}

fn check_u(u: &[f64], d: usize) -> Result<()> {
    if u.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: u.len(),
        });
    }
    match u.iter().position(|&v| !(v > 0.0 && v < 1.0)) {
        Some(col) => Err(Error::Boundary {
            row: 0,
            col,
            value: u[col],
        }),
        None => Ok(()),
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 2.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(domain("student t copula", format!("nu = {nu} must be finite and > 2")))
    }
}

pub fn gaussian_copula_logdensity(u: &[f64], rho: &CorrelationMatrix) -> Result<f64> {
    check_u(u, rho.dim())?;
    let zeta: Vec<f64> = u.iter().map(|&p| specfn::normal_quantile_unchecked(p)).collect();
    Ok(gaussian_logdensity_zeta(&zeta, rho))
}

/// Gaussian copula log-density at normal scores `zeta`.
pub(crate) fn gaussian_logdensity_zeta(zeta: &[f64], rho: &CorrelationMatrix) -> f64 {
    let q = rho.quad_form(zeta);
    let zz: f64 = zeta.iter().map(|z| z * z).sum();
    -0.5 * rho.logdet() - 0.5 * (q - zz)
}

pub fn student_t_copula_logdensity(u: &[f64], rho: &CorrelationMatrix, nu: f64) -> Result<f64> {
    check_u(u, rho.dim())?;
    check_nu(nu)?;
    let zeta: Vec<f64> = u
        .iter()
        .map(|&p| specfn::student_t_quantile_unchecked(p, nu))
        .collect();
    Ok(t_logdensity_zeta(&zeta, rho, nu, t_constant(nu, rho.dim())))
}

/// Gamma-function part of the t copula log-density for given `nu`, `d`.
pub(crate) fn t_constant(nu: f64, d: usize) -> f64 {
    let lg = |x: f64| specfn::ln_gamma(x).expect("positive argument");
    let d = d as f64;
    lg(0.5 * (nu + d)) - lg(0.5 * nu) + d * (lg(0.5 * nu) - lg(0.5 * (nu + 1.0)))
}

/// t copula log-density at t scores `zeta`; `constant` from [`t_constant`].
pub(crate) fn t_logdensity_zeta(zeta: &[f64], rho: &CorrelationMatrix, nu: f64, constant: f64) -> f64 {
    let d = zeta.len() as f64;
    let q = rho.quad_form(zeta);
    let marg: f64 = zeta.iter().map(|z| (z * z / nu).ln_1p()).sum();
    -0.5 * rho.logdet() + constant - 0.5 * (nu + d) * (q / nu).ln_1p() + 0.5 * (nu + 1.0) * marg
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaKind {
    Gaussian,
    StudentT,
}

impl std::str::FromStr for CopulaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(CopulaKind::Gaussian),
            "t" | "student_t" | "studentt" => Ok(CopulaKind::StudentT),
            other => Err(Error::InvalidConfig(format!("unknown copula '{other}'"))),
        }
    }
}

/// A fitted parametric copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "CopulaRepr")]
pub enum CopulaModel {
    Gaussian { rho: CorrelationMatrix },
    /// `nu` is finite and above 2; use `Gaussian` for the infinite limit.
    StudentT { rho: CorrelationMatrix, nu: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CopulaRepr {
    Gaussian { rho: CorrelationMatrix },
    StudentT { rho: CorrelationMatrix, nu: f64 },
}

impl TryFrom<CopulaRepr> for CopulaModel {
    type Error = Error;

    fn try_from(r: CopulaRepr) -> Result<Self> {
        match r {
            CopulaRepr::Gaussian { rho } => Ok(CopulaModel::Gaussian { rho }),
            CopulaRepr::StudentT { rho, nu } => CopulaModel::student_t(rho, nu),
        }
    }
}

impl CopulaModel {
    pub fn gaussian(rho: CorrelationMatrix) -> Self {
        CopulaModel::Gaussian { rho }
    }

    pub fn student_t(rho: CorrelationMatrix, nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(CopulaModel::StudentT { rho, nu })
    }

    pub fn kind(&self) -> CopulaKind {
        match self {
            CopulaModel::Gaussian { .. } => CopulaKind::Gaussian,
            CopulaModel::StudentT { .. } => CopulaKind::StudentT,
        }
    }

    pub fn rho(&self) -> &CorrelationMatrix {
        match self {
            CopulaModel::Gaussian { rho } | CopulaModel::StudentT { rho, .. } => rho,
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match self {
            CopulaModel::Gaussian { .. } => None,
            CopulaModel::StudentT { nu, .. } => Some(*nu),
        }
    }

    pub fn dim(&self) -> usize {
        self.rho().dim()
    }

    /// Log-density at `u`. A t copula with `nu >= NU_MAX` is evaluated as
    /// its Gaussian limit.
    pub fn logdensity(&self, u: &[f64]) -> Result<f64> {
        match self {
            CopulaModel::StudentT { rho, nu } if *nu < NU_MAX => {
                student_t_copula_logdensity(u, rho, *nu)
            }
            _ => gaussian_copula_logdensity(u, self.rho()),
        }
    }

    /// `n` seeded draws from the copula, one row per draw.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub(crate) fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        match self {
            CopulaModel::Gaussian { rho } => sample_gaussian_with(rho, n, rng),
            CopulaModel::StudentT { rho, nu } => sample_t_with(rho, *nu, n, rng),
        }
    }
}

/// Keeps sampled probabilities strictly inside (0, 1) when the score lies far
/// enough in a tail that the cdf rounds to an endpoint.
fn interior(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn sample_gaussian_copula(rho: &CorrelationMatrix, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_gaussian_with(rho, n, &mut rng)
}

pub fn sample_t_copula(
    rho: &CorrelationMatrix,
    nu: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_nu(nu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_t_with(rho, nu, n, &mut rng))
}

fn standard_normals<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn sample_gaussian_with<R: Rng + ?Sized>(
    rho: &CorrelationMatrix,
    n: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let z = rho.mul_chol(&standard_normals(rho.dim(), rng));
            z.into_iter().map(|v| interior(specfn::normal_cdf(v))).collect()
        })
        .collect()
}

fn sample_t_with<R: Rng + ?Sized>(
    rho: &CorrelationMatrix,
    nu: f64,
    n: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let chi = ChiSquared::new(nu).expect("nu validated");
    (0..n)
        .map(|_| {
            let z = rho.mul_chol(&standard_normals(rho.dim(), rng));
            let s: f64 = chi.sample(rng);
            let w = (nu / s).sqrt();
            z.into_iter()
                .map(|v| interior(specfn::student_t_cdf_unchecked(v * w, nu)))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(r: f64) -> CorrelationMatrix {
        CorrelationMatrix::exchangeable(2, r).unwrap()
    }

    #[test]
    fn identity_and_two_by_two_logdet() {
        let id = make_correlation(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(id.logdet(), 0.0);
        assert!((two(0.4).logdet() - 0.84f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn slightly_invalid_matrix_is_repaired() {
        let m = two(1.0 + 1e-12);
        assert!(m.was_repaired());
        assert!(m.get(0, 1) < 1.0);
        assert_eq!(m.get(1, 0), m.get(0, 1));
        assert_eq!(m.get(0, 0), 1.0);
        let expected = 2.0 * m.chol().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        assert_eq!(m.logdet(), expected);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(matches!(
            make_correlation(&DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]);
        assert!(matches!(make_correlation(&asym), Err(Error::NotCorrelation(_))));
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(make_correlation(&diag), Err(Error::NotCorrelation(_))));
    }

    #[test]
    fn gaussian_examples() {
        let id = CorrelationMatrix::identity(4);
        assert_eq!(
            gaussian_copula_logdensity(&[0.1, 0.5, 0.77, 0.99], &id).unwrap(),
            0.0
        );
        let v = gaussian_copula_logdensity(&[0.5, 0.5], &two(0.4)).unwrap();
        assert!((v + 0.5 * 0.84f64.ln()).abs() < 1e-15);
        assert!((v - 0.087176).abs() < 1e-6);
    }

    #[test]
    fn boundary_rejected() {
        let e = gaussian_copula_logdensity(&[0.5, 1.0], &two(0.4)).unwrap_err();
        assert!(matches!(e, Error::Boundary { col: 1, .. }));
        assert!(student_t_copula_logdensity(&[0.0, 0.5], &two(0.4), 4.0).is_err());
        assert!(student_t_copula_logdensity(&[0.3, 0.5], &two(0.4), 2.0).is_err());
    }

    #[test]
    fn t_examples() {
        let v = student_t_copula_logdensity(&[0.5, 0.5], &CorrelationMatrix::identity(2), 5.0)
            .unwrap();
        assert!((v - 0.09936).abs() < 1e-5, "{v}");
        let big = student_t_copula_logdensity(&[0.2, 0.9], &CorrelationMatrix::identity(2), 1e6)
            .unwrap();
        assert!(big.abs() < 1e-3, "{big}");
    }

    #[test]
    fn large_nu_model_uses_gaussian_limit() {
        let rho = two(0.3);
        let m = CopulaModel::student_t(rho.clone(), NU_MAX).unwrap();
        let u = [0.2, 0.7];
        assert_eq!(
            m.logdensity(&u).unwrap(),
            gaussian_copula_logdensity(&u, &rho).unwrap()
        );
        assert!(CopulaModel::student_t(rho, f64::INFINITY).is_err());
    }

    #[test]
    fn samplers_are_deterministic() {
        let rho = CorrelationMatrix::exchangeable(3, 0.5).unwrap();
        assert_eq!(sample_gaussian_copula(&rho, 50, 7), sample_gaussian_copula(&rho, 50, 7));
        assert_eq!(
            sample_t_copula(&rho, 4.0, 50, 7).unwrap(),
            sample_t_copula(&rho, 4.0, 50, 7).unwrap()
        );
        assert_ne!(sample_gaussian_copula(&rho, 50, 7), sample_gaussian_copula(&rho, 50, 8));
    }
}
