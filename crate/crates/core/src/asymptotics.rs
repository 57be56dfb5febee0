//! Gaussian approximations of the fold covariance: the binomial local limit
//! theorem, leading-order and sublinear closed forms, and the triple-Gaussian
//! lattice sum with its theta-series correction.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial::{binomial_row, ln_half_binomial_pmf};
use crate::config::LabConfig;
use crate::error::{CvError, Result};
use crate::exact::{
    central_binomial_mass, endpoint_cov_half, fold_covariance_log, fold_covariance_rational, CovarianceQuery,
    PrecisionMode,
};
use crate::summation::CompensatedSum;

/// `g_r(t) = sqrt(2/(pi r)) exp(-(2t - r)^2 / (2r))`.
pub fn gaussian_proxy(r: u64, t: f64) -> f64 {
    assert!(r >= 1, "r must be positive");
    let r = r as f64;
    let d = 2.0 * t - r;
    (2.0 / (PI * r)).sqrt() * (-d * d / (2.0 * r)).exp()
}

/// `2^-bits_exp * c` as `f64`, without forming a rational.
fn scaled_to_f64(c: &BigUint, bits_exp: u64) -> f64 {
    let bits = c.bits();
    let drop = bits.saturating_sub(64);
    let top = (c >> drop).to_u64().expect("fits in 64 bits") as f64;
    let exp = drop as i64 - bits_exp as i64;
    if exp < -2000 {
        return 0.0;
    }
    // Two steps so intermediate powers stay in range.
    top * 2f64.powi((exp / 2) as i32) * 2f64.powi((exp - exp / 2) as i32)
}

/// `max_t |2^-r C(r, t) - g_r(t)|` over `t = 0..=r`, masses taken from the exact row.
pub fn llt_sup_error(r: u64) -> f64 {
    assert!(r >= 2, "r must be at least 2");
    let row = binomial_row(r);
    // Both the mass and the proxy are symmetric about r/2.
    row.iter()
        .take(r as usize / 2 + 1)
        .enumerate()
        .map(|(t, c)| (scaled_to_f64(c, r) - gaussian_proxy(r, t as f64)).abs())
        .fold(0.0, f64::max)
}

/// `(r, llt_sup_error(r))` for every `r` in `lo..=hi`.
pub fn llt_envelope(lo: u64, hi: u64) -> Vec<(u64, f64)> {
    (lo.max(2)..=hi)
        .into_par_iter()
        .map(|r| (r, llt_sup_error(r)))
        .collect()
}

/// `max_r r^{3/2} llt_sup_error(r)` over `lo..=hi`.
pub fn fit_llt_constant(lo: u64, hi: u64) -> f64 {
    llt_envelope(lo, hi)
        .into_iter()
        .map(|(r, e)| e * (r as f64).powf(1.5))
        .fold(0.0, f64::max)
}

/// `M_{n,m} = 1 / (2 pi sqrt((m-1)(2n-3m)))`.
pub fn leading_term(n: u64, m: u64) -> Result<f64> {
    if m < 2 || 2 * m > n {
        return Err(CvError::InvalidArgument(format!(
            "leading term needs 2 <= m <= n/2 (n = {n}, m = {m})"
        )));
    }
    Ok(1.0 / (2.0 * PI * (((m - 1) as f64) * (2 * n - 3 * m) as f64).sqrt()))
}

fn check_regime(n: u64, m: u64, lo: u64, config: &LabConfig) -> Result<()> {
    let divisor = config.regime_divisor;
    if m < lo || m * divisor > n {
        return Err(CvError::OutsideRegime { n, m, lo, divisor });
    }
    Ok(())
}

/// `S_r = 2^-2r C(2r, r)`, exact for small `r` and log-space beyond.
fn central_mass_f64(r: u64) -> f64 {
    if r <= 512 {
        central_binomial_mass(r).to_f64()
    } else {
        ln_half_binomial_pmf(2 * r, r as i64).exp()
    }
}

/// `S_{m-1} / (2 sqrt(pi (2n - 3m)))`, for `1 <= m <= n/3`.
pub fn sublinear_approx(n: u64, m: u64) -> Result<f64> {
    sublinear_approx_with(n, m, &LabConfig::default())
}

pub fn sublinear_approx_with(n: u64, m: u64, config: &LabConfig) -> Result<f64> {
    check_regime(n, m, 1, config)?;
    Ok(central_mass_f64(m - 1) / (2.0 * (PI * (2 * n - 3 * m) as f64).sqrt()))
}

/// Leading term and error budget `c / (sqrt(n) m^{3/2})`, for `2 <= m <= n/3`.
pub fn large_m_approx(n: u64, m: u64, config: &LabConfig) -> Result<(f64, f64)> {
    check_regime(n, m, 2, config)?;
    let budget = config.calibration.large_m_c / ((n as f64).sqrt() * (m as f64).powf(1.5));
    Ok((leading_term(n, m)?, budget))
}

/// Every `(n, m)` with `n` in `n_lo..=n_hi`, `m | n` and `2 <= m <= n/3`.
pub fn regime_grid(n_lo: u64, n_hi: u64, step: u64) -> Vec<(u64, u64)> {
    (n_lo..=n_hi)
        .step_by(step.max(1) as usize)
        .flat_map(|n| (2..=n / 3).filter(move |m| n % m == 0).map(move |m| (n, m)))
        .collect()
}

/// `max |Cov - M| sqrt(n) m^{3/2}` over `pairs`, with the maximizing pair.
pub fn fit_large_m_constant(pairs: &[(u64, u64)]) -> (f64, (u64, u64)) {
    pairs
        .par_iter()
        .map(|&(n, m)| {
            let leading = leading_term(n, m).expect("pairs lie in the regime");
            let scaled = (fold_covariance_log(n, m) - leading).abs() * (n as f64).sqrt() * (m as f64).powf(1.5);
            (scaled, (n, m))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, (0, 0)), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// `max_n n |Cov(n, n/2) pi (n - 2) - 1|` over even `n`.
pub fn fit_endpoint_half_constant(ns: &[u64]) -> Result<f64> {
    let scaled: Vec<f64> = ns
        .par_iter()
        .map(|&n| Ok(n as f64 * (endpoint_cov_half(n)?.to_f64() * PI * (n - 2) as f64 - 1.0).abs()))
        .collect::<Result<_>>()?;
    Ok(scaled.into_iter().fold(0.0, f64::max))
}

/// Parameters of the Gaussian `exp(-gamma (j - mu)^2)` left after completing
/// the square in `g_{m-1}(j)^2 g_N(l - j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub n: u64,
    pub m: u64,
    /// `N = n - 2m`.
    pub rest: u64,
    /// `l = floor((n - m)/2)`.
    pub ell: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    /// `(n - m)/2 - l`, either 0 or 1/2.
    pub epsilon: f64,
}

impl ThetaParams {
    pub fn new(n: u64, m: u64) -> Result<Self> {
        if m < 2 || n <= 2 * m {
            return Err(CvError::InvalidArgument(format!(
                "lattice sum needs m >= 2 and N = n - 2m >= 1 (n = {n}, m = {m})"
            )));
        }
        let rest = n - 2 * m;
        let ell = (n - m) / 2;
        let epsilon = if (n - m) % 2 == 1 { 0.5 } else { 0.0 };
        let (mf, nf) = ((m - 1) as f64, rest as f64);
        let gamma = 2.0 * (2.0 * nf + mf) / (mf * nf);
        let mu = mf * (2.0 * nf + m as f64 - 2.0 * epsilon) / (2.0 * (2.0 * nf + mf));
        Ok(ThetaParams {
            n,
            m,
            rest,
            ell,
            alpha: 4.0 / mf,
            beta: 2.0 / nf,
            gamma,
            mu,
            epsilon,
        })
    }
}

/// `1 + 2 sum_{t=1}^{t_max} exp(-pi^2 t^2 / gamma) cos(2 pi t mu)`.
pub fn theta_correction(p: &ThetaParams, t_max: u32) -> f64 {
    theta_series(p.gamma, p.mu, t_max)
}

fn theta_series(gamma: f64, mu: f64, t_max: u32) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive");
    let mut sum = CompensatedSum::new();
    sum.add(1.0);
    for t in 1..=t_max {
        let t = t as f64;
        let weight = (-PI * PI * t * t / gamma).exp();
        if weight < 1e-300 {
            break;
        }
        // Reduce t mu mod 1 before scaling by 2 pi.
        let phase = (t * mu).rem_euclid(1.0);
        sum.add(2.0 * weight * (2.0 * PI * phase).cos());
    }
    sum.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeMode {
    /// Windowed sum over integer `j`.
    Direct,
    /// Closed form times the theta correction.
    ThetaForm,
}

impl FromStr for LatticeMode {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(LatticeMode::Direct),
            "theta" => Ok(LatticeMode::ThetaForm),
            other => Err(CvError::Parse(format!(
                "unknown lattice mode {other:?} (expected direct|theta)"
            ))),
        }
    }
}

impl fmt::Display for LatticeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LatticeMode::Direct => "direct",
            LatticeMode::ThetaForm => "theta",
        })
    }
}

/// `sum_j g_{m-1}(j)^2 g_N(l - j)`; one quarter of it approximates `Cov(n, m)`.
pub fn triple_gaussian_lattice_sum(n: u64, m: u64, mode: LatticeMode) -> Result<f64> {
    triple_gaussian_lattice_sum_with(n, m, mode, &LabConfig::default())
}

pub fn triple_gaussian_lattice_sum_with(n: u64, m: u64, mode: LatticeMode, config: &LabConfig) -> Result<f64> {
    let p = ThetaParams::new(n, m)?;
    Ok(match mode {
        LatticeMode::Direct => {
            let (lo, hi) = gaussian_window(p.gamma, p.mu, config.lattice_window_sd);
            let mut sum = CompensatedSum::new();
            for j in lo..=hi {
                let g = gaussian_proxy(m - 1, j as f64);
                sum.add(g * g * gaussian_proxy(p.rest, p.ell as f64 - j as f64));
            }
            sum.value()
        }
        LatticeMode::ThetaForm => {
            let spread = (2 * p.rest + m - 1) as f64;
            let offset = p.epsilon - 0.5;
            2.0 / PI / (((m - 1) as f64) * spread).sqrt()
                * (-4.0 * offset * offset / spread).exp()
                * theta_correction(&p, config.theta_terms)
        }
    })
}

/// Integer window `mu +- sd` standard deviations of `exp(-gamma x^2)`, widened by one.
fn gaussian_window(gamma: f64, mu: f64, sd: f64) -> (i64, i64) {
    let half = sd / (2.0 * gamma).sqrt();
    ((mu - half).floor() as i64 - 1, (mu + half).ceil() as i64 + 1)
}

/// The theta series `1 + 2 sum_t q^{t^2} cos(2 pi t mu)`, `q = exp(-pi^2/gamma)`,
/// as the Jacobi triple product
/// `prod_n (1 - q^{2n}) ((1 - q^{2n-1})^2 + 4 q^{2n-1} cos^2(pi mu))`.
/// Every factor is positive, so there is no cancellation near `mu = 1/2`.
pub fn theta_product(gamma: f64, mu: f64) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive");
    let x = PI * PI / gamma;
    let c = (PI * mu.rem_euclid(1.0)).cos();
    let mut product = 1.0;
    for n in 1u32.. {
        let odd = (2 * n - 1) as f64 * x;
        let q_odd = (-odd).exp();
        if q_odd < 1e-18 {
            break;
        }
        let one_minus_odd = -(-odd).exp_m1();
        let one_minus_even = -(-2.0 * n as f64 * x).exp_m1();
        product *= one_minus_even * (one_minus_odd * one_minus_odd + 4.0 * q_odd * c * c);
    }
    product
}

/// Both sides of `sum_j exp(-gamma (j - mu)^2) = sqrt(pi/gamma) sum_t exp(-pi^2 t^2/gamma) e^{-2 pi i t mu}`,
/// the theta series on the right evaluated by [`theta_product`].
pub fn poisson_summation_check(gamma: f64, mu: f64) -> (f64, f64) {
    assert!(gamma > 0.0, "gamma must be positive");
    let (lo, hi) = gaussian_window(gamma, mu, 12.0);
    let mut lhs = CompensatedSum::new();
    for j in lo..=hi {
        let d = j as f64 - mu;
        lhs.add((-gamma * d * d).exp());
    }
    let rhs = (PI / gamma).sqrt() * theta_product(gamma, mu);
    (lhs.value(), rhs)
}

/// The exact covariance next to each of its approximations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n: u64,
    pub m: u64,
    pub exact: f64,
    pub leading: Option<f64>,
    pub sublinear: Option<f64>,
    /// One quarter of the theta-form lattice sum.
    pub theta_corrected: Option<f64>,
    pub rel_err_leading: Option<f64>,
    pub rel_err_sublinear: Option<f64>,
}

impl CovarianceReport {
    pub fn compute(n: u64, m: u64, config: &LabConfig) -> Result<Self> {
        CovarianceQuery::new(n, m, PrecisionMode::LogSpaceFloat)?;
        let exact = if n <= config.exact_n_cap {
            fold_covariance_rational(n, m).to_f64()
        } else {
            fold_covariance_log(n, m)
        };
        let leading = leading_term(n, m).ok();
        let sublinear = sublinear_approx_with(n, m, config).ok();
        let theta_corrected = triple_gaussian_lattice_sum_with(n, m, LatticeMode::ThetaForm, config)
            .ok()
            .map(|s| s / 4.0);
        let rel = |approx: Option<f64>| approx.map(|a| (a / exact - 1.0).abs());
        Ok(CovarianceReport {
            n,
            m,
            exact,
            leading,
            sublinear,
            theta_corrected,
            rel_err_leading: rel(leading),
            rel_err_sublinear: rel(sublinear),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::endpoint_cov_m1;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a / b - 1.0).abs() <= rel
    }

    #[test]
    fn gaussian_proxy_examples() {
        assert!(close(gaussian_proxy(4, 2.0), (1.0 / (2.0 * PI)).sqrt(), 1e-15));
        assert!(close(gaussian_proxy(2, 1.0), (1.0 / PI).sqrt(), 1e-15));
        assert!(close(
            gaussian_proxy(2, 0.0),
            (1.0 / PI).sqrt() * (-1.0f64).exp(),
            1e-15
        ));
    }

    #[test]
    fn scaled_conversion_matches_rational() {
        for r in [2u64, 30, 100, 1500] {
            for (t, c) in binomial_row(r).iter().enumerate().step_by(7) {
                let exact = crate::binomial::binomial(r, t as i64);
                let via_rational = crate::ExactRational::dyadic(num_bigint::BigInt::from(exact), r).to_f64();
                let fast = scaled_to_f64(c, r);
                // The rational conversion flushes subnormals to zero.
                if via_rational > 1e-300 {
                    assert!(close(fast, via_rational, 1e-15), "r={r} t={t}");
                }
            }
        }
    }

    #[test]
    fn llt_examples() {
        assert!((llt_sup_error(2) - 0.0642).abs() < 1e-4);
        assert!((llt_sup_error(4) - 0.02394).abs() < 1e-5);
        assert!((llt_sup_error(16) - 0.00309).abs() < 1e-5);
        assert!(llt_sup_error(16) < llt_sup_error(4));
        let c0 = LabConfig::default().calibration.llt_c0;
        assert!(llt_sup_error(100) <= c0 * 100f64.powf(-1.5));
    }

    #[test]
    fn leading_term_examples() {
        assert!(close(
            leading_term(100, 10).unwrap(),
            1.0 / (2.0 * PI * 1530f64.sqrt()),
            1e-15
        ));
        assert!(close(leading_term(100, 10).unwrap(), 4.069e-3, 1e-3));
        assert!(leading_term(100, 1).is_err());
        assert!(leading_term(100, 51).is_err());
        // k = 3: M = sqrt(3) / (2 pi n) to leading order.
        let n = 30_000;
        assert!(close(
            leading_term(n, n / 3).unwrap(),
            3f64.sqrt() / (2.0 * PI * n as f64),
            1e-4
        ));
        let n = 1_000_000;
        assert!(close(
            leading_term(n, 1000).unwrap(),
            fold_covariance_log(n, 1000),
            0.01
        ));
    }

    #[test]
    fn sublinear_examples() {
        let exact = endpoint_cov_m1(1001).unwrap().to_f64();
        let approx = sublinear_approx(1001, 1).unwrap();
        assert!((approx - exact).abs() < 1001f64.powf(-1.5));
        assert!(close(
            sublinear_approx(4, 1).unwrap(),
            1.0 / (2.0 * (5.0 * PI).sqrt()),
            1e-15
        ));
        assert!((sublinear_approx(4, 1).unwrap() - 0.1262).abs() < 1e-4);
        assert!(close(
            sublinear_approx(3000, 10).unwrap(),
            fold_covariance_log(3000, 10),
            1e-2
        ));
        assert_eq!(
            sublinear_approx(12, 6),
            Err(CvError::OutsideRegime {
                n: 12,
                m: 6,
                lo: 1,
                divisor: 3
            })
        );
    }

    #[test]
    fn sublinear_log_branch_is_continuous() {
        let exact = central_binomial_mass(600).to_f64();
        let logged = ln_half_binomial_pmf(1200, 600).exp();
        assert!(close(exact, logged, 1e-13));
    }

    #[test]
    fn large_m_examples() {
        let cfg = LabConfig::default();
        let (leading, budget) = large_m_approx(3000, 1000, &cfg).unwrap();
        assert!(close(leading, 1.0 / (2.0 * PI * (999.0f64 * 3000.0).sqrt()), 1e-15));
        assert!(close(leading, 9.195e-5, 1e-3));
        assert!((fold_covariance_log(3000, 1000) - leading).abs() <= budget);
        let (leading, _) = large_m_approx(600, 200, &cfg).unwrap();
        assert!(close(leading, 3f64.sqrt() / (2.0 * PI * 600.0), 0.01));
        let (leading, _) = large_m_approx(120, 40, &cfg).unwrap();
        assert!(close(leading, fold_covariance_rational(120, 40).to_f64(), 0.05));
        assert!(large_m_approx(120, 41, &cfg).is_err());
        assert!(large_m_approx(120, 1, &cfg).is_err());
    }

    #[test]
    fn large_m_budget_holds_on_calibration_grid() {
        let (c, at) = fit_large_m_constant(&regime_grid(60, 1200, 60));
        assert!(c <= LabConfig::default().calibration.large_m_c, "c = {c} at {at:?}");
    }

    #[test]
    fn theta_params_invariants() {
        for (n, m) in [(30, 5), (30, 10), (31, 5), (300, 50), (1_000_000, 1000)] {
            let p = ThetaParams::new(n, m).unwrap();
            assert!(p.alpha > 0.0 && p.beta > 0.0);
            assert!(close(p.alpha + p.beta, p.gamma, 1e-14));
            // mu is the precision-weighted mean of (m-1)/2 and m/2 - epsilon.
            let b = m as f64 / 2.0 - p.epsilon;
            let mu = (p.alpha * (m - 1) as f64 / 2.0 + p.beta * b) / p.gamma;
            assert!((mu - p.mu).abs() < 1e-9 * p.mu, "n={n} m={m}");
        }
        assert!(ThetaParams::new(20, 10).is_err());
        assert!(ThetaParams::new(20, 1).is_err());
    }

    #[test]
    fn theta_correction_examples() {
        // Strong suppression: pi^2 / gamma >= 40.
        let flat = theta_series(PI * PI / 40.0, 0.37, 16);
        assert!((flat - 1.0).abs() < 1e-10);
        let v = theta_series(1.0, 0.0, 16);
        let series: f64 = 1.0 + 2.0 * (1..=16).map(|t| (-PI * PI * (t * t) as f64).exp()).sum::<f64>();
        assert!((v - series).abs() < 1e-15);
        assert!((v - (1.0 + 2.0 * (-PI * PI).exp())).abs() < 1e-15);
        for gamma in [0.5, 2.0, 8.0, 40.0] {
            for mu in [0.0, 0.25, 0.5, 0.9] {
                let q = (-PI * PI / gamma).exp();
                assert!((theta_series(gamma, mu, 16) - 1.0).abs() <= 2.0 * q / (1.0 - q) + 1e-15);
            }
        }
    }

    #[test]
    fn lattice_modes_agree() {
        for (n, m) in [(30, 5), (30, 10), (31, 5), (300, 50), (3000, 2), (100_000, 1000)] {
            let direct = triple_gaussian_lattice_sum(n, m, LatticeMode::Direct).unwrap();
            let theta = triple_gaussian_lattice_sum(n, m, LatticeMode::ThetaForm).unwrap();
            assert!(close(direct, theta, 1e-12), "n={n} m={m} direct={direct} theta={theta}");
        }
        let (n, m) = (300u64, 50u64);
        let plain = 2.0 / PI / (((m - 1) * (2 * n - 3 * m - 1)) as f64).sqrt();
        assert!(close(
            triple_gaussian_lattice_sum(n, m, LatticeMode::Direct).unwrap(),
            plain,
            0.01
        ));
        assert!(triple_gaussian_lattice_sum(20, 10, LatticeMode::Direct).is_err());
    }

    #[test]
    fn poisson_summation_examples() {
        for (gamma, mu) in [(1.0, 0.3), (0.05, 17.25), (50.0, 0.5), (3.0, -2.2)] {
            let (lhs, rhs) = poisson_summation_check(gamma, mu);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * lhs,
                "gamma={gamma} mu={mu} lhs={lhs} rhs={rhs}"
            );
        }
        let (lhs, _) = poisson_summation_check(50.0, 0.5);
        assert!(close(lhs, 2.0 * (-12.5f64).exp(), 1e-12));
        // Reference from a 40-digit evaluation.
        assert!(close(lhs, 7.453_306_344_157_342e-6, 1e-14));
    }

    #[test]
    fn theta_product_matches_series() {
        for gamma in [0.05, 0.5, 1.0, 4.0, 20.0, 50.0] {
            for mu in [0.0, 0.1, 0.3, 0.5, 0.77, -2.2, 17.25] {
                let series = theta_series(gamma, mu, 100_000);
                let product = theta_product(gamma, mu);
                assert!(
                    (series - product).abs() < 1e-13 * series.abs().max(1.0),
                    "gamma={gamma} mu={mu} {series} {product}"
                );
            }
        }
    }

    #[test]
    fn report_fields() {
        let cfg = LabConfig::default();
        let r = CovarianceReport::compute(300, 50, &cfg).unwrap();
        for v in [
            r.leading,
            r.sublinear,
            r.theta_corrected,
            r.rel_err_leading,
            r.rel_err_sublinear,
        ] {
            assert!(v.unwrap().is_finite() && v.unwrap() >= 0.0);
        }
        assert_eq!(r.rel_err_leading.unwrap(), (r.leading.unwrap() / r.exact - 1.0).abs());
        let endpoint = CovarianceReport::compute(300, 150, &cfg).unwrap();
        assert!(endpoint.sublinear.is_none() && endpoint.theta_corrected.is_none());
        let tiny = CovarianceReport::compute(300, 1, &cfg).unwrap();
        assert!(tiny.leading.is_none() && tiny.sublinear.is_some());
    }

    #[test]
    fn endpoint_half_constant() {
        let ns: Vec<u64> = (100..=1000).step_by(2).collect();
        let c = fit_endpoint_half_constant(&ns).unwrap();
        assert!(c <= LabConfig::default().calibration.endpoint_half_c, "{c}");
    }
}
