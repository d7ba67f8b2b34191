//! Special functions and univariate distribution kernels.
//!
//! Everything here is a pure function of its arguments. Incomplete gamma and
//! beta functions use the usual power-series / continued-fraction split with
//! a relative stopping tolerance of 1e-15; quantiles without closed forms are
//! refined by a bracketed Newton iteration on the cdf.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// ln(2π).
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
const SERIES_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(domain("Probability::new", format!("{value} is outside [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("ln_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b)
}

/// Digamma function ψ(x) for `x > 0`.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 120.0
                        - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))))
}

/// Trigamma function ψ'(x) for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0))))
}

/// Regularized incomplete gamma functions `(P(a, x), Q(a, x))`.
fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let log_prefix = -x + a * x.ln() - ln_gamma_pos(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * SERIES_EPS {
                break;
            }
        }
        let p = (sum.ln() + log_prefix).exp();
        (p, 1.0 - p)
    } else {
        // modified Lentz
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < SERIES_EPS {
                break;
            }
        }
        let q = (h.ln() + log_prefix).exp();
        (1.0 - q, q)
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < SERIES_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`, taking both `x` and `y = 1 - x`
/// so callers can pass whichever complement they computed without cancellation.
fn beta_reg(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let log_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (log_front + beta_cf(a, b, x).ln()).exp() / a
    } else {
        1.0 - (log_front + beta_cf(b, a, y).ln()).exp() / b
    }
}

/// Standard normal cdf Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = 0.5 * x * x;
    if z < 1.5 {
        let (p, _) = gamma_pq(0.5, z);
        if x < 0.0 {
            0.5 - 0.5 * p
        } else {
            0.5 + 0.5 * p
        }
    } else {
        let (_, q) = gamma_pq(0.5, z);
        if x < 0.0 {
            0.5 * q
        } else {
            1.0 - 0.5 * q
        }
    }
}

/// Standard normal log-density.
pub fn normal_logpdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

// Acklam's rational approximation, used as a starting point.
const ACK_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACK_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACK_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACK_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((ACK_C[0] * q + ACK_C[1]) * q + ACK_C[2]) * q + ACK_C[3]) * q + ACK_C[4]) * q
            + ACK_C[5])
            / ((((ACK_D[0] * q + ACK_D[1]) * q + ACK_D[2]) * q + ACK_D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((ACK_A[0] * r + ACK_A[1]) * r + ACK_A[2]) * r + ACK_A[3]) * r + ACK_A[4]) * r
            + ACK_A[5])
            * q
            / (((((ACK_B[0] * r + ACK_B[1]) * r + ACK_B[2]) * r + ACK_B[3]) * r + ACK_B[4]) * r
                + 1.0)
    }
}

/// Inverse of the standard normal cdf, for `0 < p < 1`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("normal_quantile", format!("p = {p} must lie in (0, 1)")));
    }
    Ok(normal_quantile_unchecked(p))
}

pub(crate) fn normal_quantile_unchecked(p: f64) -> f64 {
    if p > 0.5 {
        // 1 - p is exact here
        return -normal_quantile_lower(1.0 - p);
    }
    normal_quantile_lower(p)
}

fn normal_quantile_lower(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut x = acklam(p);
    // Halley refinement
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e * (0.5 * x * x + LN_SQRT_2PI).exp();
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Student's t cdf with `nu` degrees of freedom.
pub fn student_t_cdf(x: f64, nu: f64) -> Result<f64> {
    check_nu("student_t_cdf", nu)?;
    Ok(student_t_cdf_unchecked(x, nu))
}

pub(crate) fn student_t_cdf_unchecked(x: f64, nu: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let x2 = x * x;
    let t = nu / (nu + x2);
    let s = x2 / (nu + x2);
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, t, s);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Student's t log-density with `nu` degrees of freedom.
pub fn student_t_logpdf(x: f64, nu: f64) -> Result<f64> {
    check_nu("student_t_logpdf", nu)?;
    Ok(student_t_logpdf_unchecked(x, nu))
}

pub(crate) fn student_t_logpdf_unchecked(x: f64, nu: f64) -> f64 {
    ln_gamma_pos(0.5 * (nu + 1.0)) - ln_gamma_pos(0.5 * nu) - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

/// Student's t quantile, for `0 < p < 1`.
pub fn student_t_quantile(p: f64, nu: f64) -> Result<f64> {
    check_nu("student_t_quantile", nu)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("student_t_quantile", format!("p = {p} must lie in (0, 1)")));
    }
    Ok(student_t_quantile_unchecked(p, nu))
}

pub(crate) fn student_t_quantile_unchecked(p: f64, nu: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -t_quantile_lower(1.0 - p, nu);
    }
    t_quantile_lower(p, nu)
}

fn t_quantile_lower(p: f64, nu: f64) -> f64 {
    if nu == 1.0 {
        return (PI * (p - 0.5)).tan();
    }
    if nu == 2.0 {
        return (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
    }
    // Cornish-Fisher start
    let z = normal_quantile_lower(p);
    let z2 = z * z;
    let g1 = (z2 + 1.0) * z / 4.0;
    let g2 = ((5.0 * z2 + 16.0) * z2 + 3.0) * z / 96.0;
    let g3 = (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / 384.0;
    let mut x0 = z + g1 / nu + g2 / (nu * nu) + g3 / (nu * nu * nu);
    if !x0.is_finite() || x0 >= 0.0 {
        x0 = z;
    }
    // Newton on ln F(x) = ln p over the negative half-line.
    let target = p.ln();
    let mut hi = 0.0;
    let mut lo = x0.min(-1.0);
    while student_t_cdf_unchecked(lo, nu) > p {
        hi = lo;
        lo *= 2.0;
        if lo < -1e300 {
            return lo;
        }
    }
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let cdf = student_t_cdf_unchecked(x, nu);
        if cdf == p {
            return x;
        }
        if cdf > p {
            hi = x;
        } else {
            lo = x;
        }
        let g = cdf.ln() - target;
        let slope = (student_t_logpdf_unchecked(x, nu) - cdf.ln()).exp();
        let mut next = x - g / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}

fn check_nu(func: &'static str, nu: f64) -> Result<()> {
    if nu > 0.0 && !nu.is_nan() {
        Ok(())
    } else {
        Err(domain(func, format!("degrees of freedom {nu} must be positive")))
    }
}

fn check_positive(func: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(func, format!("{name} = {v} must be positive and finite")))
    }
}

fn check_open_unit(func: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(func, format!("p = {p} must lie in (0, 1)")))
    }
}

pub fn gamma_logpdf(x: f64, shape: f64, scale: f64) -> Result<f64> {
    check_positive("gamma_logpdf", "shape", shape)?;
    check_positive("gamma_logpdf", "scale", scale)?;
    if !(x >= 0.0) || x.is_infinite() {
        return Err(domain("gamma_logpdf", format!("x = {x} is outside [0, inf)")));
    }
    if x == 0.0 {
        return Ok(if shape == 1.0 {
            -scale.ln()
        } else if shape < 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        });
    }
    Ok((shape - 1.0) * x.ln() - x / scale - ln_gamma_pos(shape) - shape * scale.ln())
}

/// Gamma cdf; zero below the support.
pub fn gamma_cdf(x: f64, shape: f64, scale: f64) -> Result<f64> {
    check_positive("gamma_cdf", "shape", shape)?;
    check_positive("gamma_cdf", "scale", scale)?;
    if x.is_nan() {
        return Err(domain("gamma_cdf", "x is NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_pq(shape, x / scale).0)
}

pub fn gamma_quantile(p: f64, shape: f64, scale: f64) -> Result<f64> {
    check_positive("gamma_quantile", "shape", shape)?;
    check_positive("gamma_quantile", "scale", scale)?;
    check_open_unit("gamma_quantile", p)?;
    Ok(scale * standard_gamma_quantile(p, shape))
}

fn standard_gamma_quantile(p: f64, k: f64) -> f64 {
    // Wilson-Hilferty start, small-p power law as fallback
    let z = normal_quantile_unchecked(p);
    let c = 1.0 / (9.0 * k);
    let wh = k * (1.0 - c + z * c.sqrt()).powi(3);
    let small = ((p.ln() + ln_gamma_pos(k + 1.0)) / k).exp();
    let mut x = if wh > 0.0 && p > 0.05 { wh } else { small.max(f64::MIN_POSITIVE) };
    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while gamma_pq(k, hi).0 < p {
        hi *= 2.0;
    }
    x = x.clamp(f64::MIN_POSITIVE, hi);
    for _ in 0..300 {
        let (pp, qq) = gamma_pq(k, x);
        // work in the smaller tail for accuracy
        let err = if p < 0.5 { pp - p } else { (1.0 - p) - qq };
        if err == 0.0 {
            return x;
        }
        if err > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let ln_pdf = (k - 1.0) * x.ln() - x - ln_gamma_pos(k);
        let mut next = x - err / ln_pdf.exp();
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x {
            return next;
        }
        x = next;
    }
    x
}

pub fn exponential_logpdf(x: f64, rate: f64) -> Result<f64> {
    check_positive("exponential_logpdf", "rate", rate)?;
    if !(x >= 0.0) || x.is_infinite() {
        return Err(domain("exponential_logpdf", format!("x = {x} is outside [0, inf)")));
    }
    Ok(rate.ln() - rate * x)
}

pub fn exponential_cdf(x: f64, rate: f64) -> Result<f64> {
    check_positive("exponential_cdf", "rate", rate)?;
    if x.is_nan() {
        return Err(domain("exponential_cdf", "x is NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(-(-rate * x).exp_m1())
}

pub fn exponential_quantile(p: f64, rate: f64) -> Result<f64> {
    check_positive("exponential_quantile", "rate", rate)?;
    check_open_unit("exponential_quantile", p)?;
    Ok(-(-p).ln_1p() / rate)
}

pub fn lognormal_logpdf(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_positive("lognormal_logpdf", "sigma", sigma)?;
    if !(x > 0.0) || x.is_infinite() {
        return Err(domain("lognormal_logpdf", format!("x = {x} is outside (0, inf)")));
    }
    let z = (x.ln() - mu) / sigma;
    Ok(normal_logpdf(z) - sigma.ln() - x.ln())
}

pub fn lognormal_cdf(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_positive("lognormal_cdf", "sigma", sigma)?;
    if x.is_nan() {
        return Err(domain("lognormal_cdf", "x is NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(normal_cdf((x.ln() - mu) / sigma))
}

pub fn lognormal_quantile(p: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_positive("lognormal_quantile", "sigma", sigma)?;
    check_open_unit("lognormal_quantile", p)?;
    Ok((mu + sigma * normal_quantile_unchecked(p)).exp())
}

/// Chi-square with possibly non-integer `k`, defined as Gamma(k/2, 2).
pub fn chi_square_logpdf(x: f64, k: f64) -> Result<f64> {
    check_positive("chi_square_logpdf", "k", k)?;
    gamma_logpdf(x, 0.5 * k, 2.0)
}

pub fn chi_square_cdf(x: f64, k: f64) -> Result<f64> {
    check_positive("chi_square_cdf", "k", k)?;
    gamma_cdf(x, 0.5 * k, 2.0)
}

pub fn chi_square_quantile(p: f64, k: f64) -> Result<f64> {
    check_positive("chi_square_quantile", "k", k)?;
    gamma_quantile(p, 0.5 * k, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert_eq!(ln_gamma(2.0).unwrap(), 0.0);
        let ln_sqrt_pi = 0.5 * PI.ln();
        assert!((ln_gamma(0.5).unwrap() - ln_sqrt_pi).abs() < 1e-14);
        assert!((ln_gamma(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..=20u32 {
            // Γ(n) = (n-1)!
            let got = ln_gamma(n as f64).unwrap();
            assert!((got - fact.ln()).abs() < 1e-12, "n={n}: {got} vs {}", fact.ln());
            fact *= n as f64;
        }
    }

    #[test]
    fn ln_gamma_half_integers() {
        // Γ(n + 1/2) = (2n)! √π / (4^n n!)
        for n in 0..10u32 {
            let two_n_fact: f64 = (1..=2 * n).map(|i| i as f64).product();
            let n_fact: f64 = (1..=n).map(|i| i as f64).product();
            let expected = two_n_fact.ln() + 0.5 * PI.ln() - (n as f64) * 4f64.ln() - n_fact.ln();
            let got = ln_gamma(n as f64 + 0.5).unwrap();
            assert!((got - expected).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn ln_gamma_recurrence_holds_for_large_arguments() {
        for &x in &[10.3, 150.7, 2.5e3, 1e5, 9.9e5] {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + f64::ln(x);
            assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn normal_cdf_symmetry_and_tails() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!(normal_cdf(8.0) > 1.0 - 1e-14);
        for &x in &[0.1, 0.7, 1.3, 2.9, 5.5, 9.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normal_quantile_symmetry_and_domain() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        for &p in &[1.0 / 1024.0, 1.0 / 64.0, 0.125, 0.375] {
            let a = normal_quantile(p).unwrap();
            let b = normal_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-9 * a.abs().max(1.0), "p={p}");
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn student_t_small_cases() {
        assert_eq!(student_t_cdf(0.0, 5.0).unwrap(), 0.5);
        assert_eq!(student_t_quantile(0.5, 2.0).unwrap(), 0.0);
        assert!((student_t_cdf(1.0, 1.0).unwrap() - 0.75).abs() < 1e-14);
        assert!(student_t_cdf(1.0, 0.0).is_err());
        assert!(student_t_quantile(1.0, 3.0).is_err());
    }

    #[test]
    fn student_t_large_nu_approaches_normal() {
        for &x in &[-2.0, -0.5, 0.3, 1.7] {
            let t = student_t_cdf(x, 1e6).unwrap();
            assert!((t - normal_cdf(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn exponential_closed_forms() {
        assert_eq!(exponential_cdf(0.0, 0.7).unwrap(), 0.0);
        let p = 1.0 - (-1.0f64).exp();
        assert!((exponential_quantile(p, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(exponential_logpdf(-0.1, 1.0).is_err());
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(gamma_logpdf(-1.0, 4.0, 2.0).is_err());
        assert!(gamma_cdf(1.0, 0.0, 2.0).is_err());
        assert!(gamma_quantile(0.0, 4.0, 2.0).is_err());
        assert_eq!(gamma_cdf(-3.0, 4.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn chi_square_delegates_to_gamma() {
        for &x in &[0.3, 1.0, 4.2, 11.0] {
            assert_eq!(
                chi_square_cdf(x, 3.2).unwrap(),
                gamma_cdf(x, 1.6, 2.0).unwrap()
            );
            assert_eq!(
                chi_square_logpdf(x, 5.0).unwrap(),
                gamma_logpdf(x, 2.5, 2.0).unwrap()
            );
        }
    }

    #[test]
    fn digamma_trigamma_reference_values() {
        // ψ(1) = -γ, ψ'(1) = π²/6
        let euler = 0.577_215_664_901_532_9;
        assert!((digamma(1.0) + euler).abs() < 1e-13);
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-12);
        // ψ(x+1) = ψ(x) + 1/x
        for &x in &[0.3, 2.2, 7.5, 40.0] {
            assert!((digamma(x + 1.0) - digamma(x) - 1.0 / x).abs() < 1e-13);
            assert!((trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn probability_newtype_validates() {
        assert!(Probability::new(0.0).is_ok());
        assert!(Probability::new(1.0).is_ok());
        assert!(Probability::new(1.0 + 1e-12).is_err());
        assert!(Probability::new(f64::NAN).is_err());
    }
}
