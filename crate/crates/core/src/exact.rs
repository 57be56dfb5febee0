//! Closed-form fold covariance and CV mean-squared error of the Majority rule
//! under fair-coin labels, evaluated exactly or in log space.
//!
//! With `N = n - 2m` and `l = floor((n - m)/2)`,
//!
//! ```text
//! Cov(n, m) = 2^-n * sum_{j=0}^{m-1} C(m-1, j)^2 * C(N, l - j)
//! MSE(n, k) = (k-1)/k * Cov(n, n/k) + 1/(4n)
//! ```

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::binomial::{binomial, binomial_row, LogFactorials};
use crate::config::LabConfig;
use crate::error::{CvError, Result};
use crate::rational::{ratio, ExactRational};
use crate::summation::CompensatedSum;

/// Equal-fold layout: `k` folds of size `m = n / k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FoldScheme {
    n: u64,
    k: u64,
    m: u64,
}

impl FoldScheme {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(CvError::FoldCountOutOfRange { n, k });
        }
        if n % k != 0 {
            return Err(CvError::FoldsDoNotDivide { n, k });
        }
        Ok(FoldScheme { n, k, m: n / k })
    }

    pub fn from_fold_size(n: u64, m: u64) -> Result<Self> {
        check_fold_size(n, m)?;
        Ok(FoldScheme { n, k: n / m, m })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Indices of fold `i` under consecutive-block assignment.
    pub fn fold_range(&self, i: u64) -> std::ops::Range<u64> {
        i * self.m..(i + 1) * self.m
    }
}

fn check_fold_size(n: u64, m: u64) -> Result<()> {
    if m < 1 || 2 * m > n {
        return Err(CvError::FoldSizeOutOfRange { n, m });
    }
    if n % m != 0 {
        return Err(CvError::FoldSizeDoesNotDivide { n, m });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrecisionMode {
    ExactRational,
    LogSpaceFloat,
}

impl FromStr for PrecisionMode {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" | "exactrational" => Ok(PrecisionMode::ExactRational),
            "log" | "logspace" | "logspacefloat" => Ok(PrecisionMode::LogSpaceFloat),
            other => Err(CvError::Parse(format!(
                "unknown precision mode {other:?} (expected rational|log)"
            ))),
        }
    }
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecisionMode::ExactRational => "rational",
            PrecisionMode::LogSpaceFloat => "log",
        })
    }
}

/// A validated request for `Cov(n, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovarianceQuery {
    n: u64,
    m: u64,
    mode: PrecisionMode,
}

impl CovarianceQuery {
    pub fn new(n: u64, m: u64, mode: PrecisionMode) -> Result<Self> {
        check_fold_size(n, m)?;
        Ok(CovarianceQuery { n, m, mode })
    }

    pub fn for_scheme(scheme: &FoldScheme, mode: PrecisionMode) -> Result<Self> {
        Self::new(scheme.n, scheme.m, mode)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn mode(&self) -> PrecisionMode {
        self.mode
    }
}

/// Result of a covariance or MSE evaluation in either precision mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CovValue {
    Exact(ExactRational),
    Float(f64),
}

impl CovValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            CovValue::Exact(r) => r.to_f64(),
            CovValue::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&ExactRational> {
        match self {
            CovValue::Exact(r) => Some(r),
            CovValue::Float(_) => None,
        }
    }
}

impl fmt::Display for CovValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovValue::Exact(r) => write!(f, "{r}"),
            CovValue::Float(x) => write!(f, "{}", format_sig(*x, 12)),
        }
    }
}

/// Formats a float with `digits` significant digits in scientific notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

pub fn exact_fold_covariance(query: &CovarianceQuery) -> Result<CovValue> {
    exact_fold_covariance_with(query, &LabConfig::default())
}

pub fn exact_fold_covariance_with(query: &CovarianceQuery, config: &LabConfig) -> Result<CovValue> {
    match query.mode {
        PrecisionMode::ExactRational => {
            if query.n > config.exact_n_cap {
                return Err(CvError::ExactCapExceeded {
                    n: query.n,
                    cap: config.exact_n_cap,
                });
            }
            Ok(CovValue::Exact(fold_covariance_rational(query.n, query.m)))
        }
        PrecisionMode::LogSpaceFloat => Ok(CovValue::Float(fold_covariance_log(query.n, query.m))),
    }
}

/// Integer summands `C(m-1, j)^2 C(N, l - j)` for `j = 0..m`.
pub fn covariance_summands(n: u64, m: u64) -> Vec<BigUint> {
    let big_n = n - 2 * m;
    let l = ((n - m) / 2) as i64;
    let outer = binomial_row(m - 1);
    let inner = binomial_row(big_n);
    outer
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let y = l - j as i64;
            if y < 0 || y as u64 > big_n {
                BigUint::zero()
            } else {
                c * c * &inner[y as usize]
            }
        })
        .collect()
}

/// Exact `Cov(n, m)`; inputs are assumed validated.
pub fn fold_covariance_rational(n: u64, m: u64) -> ExactRational {
    let total: BigUint = covariance_summands(n, m).into_iter().sum();
    ExactRational::dyadic(BigInt::from(total), n)
}

/// `Cov(n, m)` accumulated in log space, in increasing `j`.
///
/// Each term is `p_{m-1}(j)^2 p_N(l-j) / 4` with `p_r` the Bin(r, 1/2) mass.
pub fn fold_covariance_log(n: u64, m: u64) -> f64 {
    let table = LogFactorials::shared();
    let big_n = n - 2 * m;
    let l = ((n - m) / 2) as i64;
    let lo = (l - big_n as i64).max(0);
    let hi = l.min(m as i64 - 1);
    let log_terms: Vec<f64> = (lo..=hi)
        .map(|j| 2.0 * table.ln_half_binomial_pmf(m - 1, j) + table.ln_half_binomial_pmf(big_n, l - j))
        .collect();
    let peak = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = CompensatedSum::new();
    for t in &log_terms {
        acc.add((t - peak).exp());
    }
    0.25 * (peak.exp() * acc.value())
}

/// `(k-1)/k * Cov(n, m) + 1/(4n)`.
pub fn exact_cv_mse(scheme: &FoldScheme) -> Result<ExactRational> {
    exact_cv_mse_with(scheme, &LabConfig::default())
}

pub fn exact_cv_mse_with(scheme: &FoldScheme, config: &LabConfig) -> Result<ExactRational> {
    let query = CovarianceQuery::for_scheme(scheme, PrecisionMode::ExactRational)?;
    let cov = exact_fold_covariance_with(&query, config)?;
    let cov = cov.as_exact().expect("rational mode").clone();
    Ok(mse_from_covariance_exact(scheme, &cov))
}

pub fn mse_from_covariance_exact(scheme: &FoldScheme, cov: &ExactRational) -> ExactRational {
    let k = scheme.k as i64;
    ratio(k - 1, k) * cov + ratio(1, 4 * scheme.n as i64)
}

pub fn mse_from_covariance_f64(scheme: &FoldScheme, cov: f64) -> f64 {
    let k = scheme.k as f64;
    (k - 1.0) / k * cov + 0.25 / scheme.n as f64
}

/// MSE in either precision mode.
pub fn cv_mse(scheme: &FoldScheme, mode: PrecisionMode, config: &LabConfig) -> Result<CovValue> {
    let query = CovarianceQuery::for_scheme(scheme, mode)?;
    Ok(match exact_fold_covariance_with(&query, config)? {
        CovValue::Exact(cov) => CovValue::Exact(mse_from_covariance_exact(scheme, &cov)),
        CovValue::Float(cov) => CovValue::Float(mse_from_covariance_f64(scheme, cov)),
    })
}

/// `Cov(n, 1) = 2^-n C(n-2, floor((n-1)/2))`.
pub fn endpoint_cov_m1(n: u64) -> Result<ExactRational> {
    if n < 2 {
        return Err(CvError::FoldSizeOutOfRange { n, m: 1 });
    }
    Ok(ExactRational::dyadic(
        BigInt::from(binomial(n - 2, ((n - 1) / 2) as i64)),
        n,
    ))
}

/// `Cov(n, n/2) = (2^-l C(l, r))^2 / 4` with `l = n/2 - 1`, `r = floor(n/4)`.
pub fn endpoint_cov_half(n: u64) -> Result<ExactRational> {
    if n % 2 != 0 {
        return Err(CvError::OddSampleSize { n });
    }
    if n < 2 {
        return Err(CvError::FoldSizeOutOfRange { n, m: n / 2 });
    }
    let l = n / 2 - 1;
    let c = BigInt::from(binomial(l, (n / 4) as i64));
    Ok(ExactRational::dyadic(&c * &c, 2 * l + 2))
}

/// Both sides of `Cov(X, 1{X >= a+1}) = (m/4) P(X' = a)` for
/// `X ~ Bin(m, 1/2)`, `X' ~ Bin(m-1, 1/2)`. The left side is computed
/// directly from the Bin(m, 1/2) mass function.
pub fn conditional_cov_identity(m: u64, a: i64) -> (ExactRational, ExactRational) {
    assert!(m >= 1, "m must be positive");
    let row = binomial_row(m);
    let mut e_x_ind = BigUint::zero();
    let mut p_ind = BigUint::zero();
    for (x, c) in row.iter().enumerate() {
        if x as i64 > a {
            e_x_ind += c * x;
            p_ind += c;
        }
    }
    // E[X 1] - E[X] P(1) with E[X] = m/2, all over 2^m.
    let lhs = ExactRational::dyadic(BigInt::from(e_x_ind), m)
        - ratio(m as i64, 2) * ExactRational::dyadic(BigInt::from(p_ind), m);
    let rhs = ratio(m as i64, 4) * ExactRational::dyadic(BigInt::from(binomial(m - 1, a)), m - 1);
    (lhs, rhs)
}

/// `S_r = 2^-2r C(2r, r)`.
pub fn central_binomial_mass(r: u64) -> ExactRational {
    ExactRational::dyadic(BigInt::from(binomial(2 * r, r as i64)), 2 * r)
}

/// Closed-form mean `r/2` and variance `r^2/(4(2r-1))` of the law
/// `w_j = p_r(j)^2 / S_r`; both zero when `r = 0`.
pub fn hypergeom_weight_moments(r: u64) -> (ExactRational, ExactRational) {
    if r == 0 {
        return (ExactRational::zero(), ExactRational::zero());
    }
    let r = r as i64;
    (ratio(r, 2), ratio(r * r, 4 * (2 * r - 1)))
}

/// Same moments by direct summation over the weights.
pub fn hypergeom_weight_moments_by_summation(r: u64) -> (ExactRational, ExactRational) {
    let row = binomial_row(r);
    let squares: Vec<BigUint> = row.iter().map(|c| c * c).collect();
    let total: BigUint = squares.iter().sum();
    let mut first = BigUint::zero();
    let mut second = BigUint::zero();
    for (j, w) in squares.iter().enumerate() {
        first += w * j;
        second += w * (j * j);
    }
    let total = ExactRational::from(total);
    let mean = ExactRational::from(first) / &total;
    let second = ExactRational::from(second) / &total;
    let var = &second - &(&mean * &mean);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(n: u64, m: u64) -> ExactRational {
        fold_covariance_rational(n, m)
    }

    #[test]
    fn scheme_validation() {
        assert!(FoldScheme::new(12, 3).is_ok());
        assert_eq!(FoldScheme::new(7, 2), Err(CvError::FoldsDoNotDivide { n: 7, k: 2 }));
        assert!(FoldScheme::new(7, 2)
            .unwrap_err()
            .to_string()
            .contains("k must divide n"));
        assert_eq!(FoldScheme::new(4, 1), Err(CvError::FoldCountOutOfRange { n: 4, k: 1 }));
        assert_eq!(FoldScheme::new(4, 8), Err(CvError::FoldCountOutOfRange { n: 4, k: 8 }));
        let s = FoldScheme::from_fold_size(12, 4).unwrap();
        assert_eq!((s.n(), s.k(), s.m()), (12, 3, 4));
        assert!(FoldScheme::from_fold_size(12, 7).is_err());
        assert!(FoldScheme::from_fold_size(12, 12).is_err());
    }

    #[test]
    fn query_validation_and_cap() {
        assert!(CovarianceQuery::new(12, 5, PrecisionMode::ExactRational).is_err());
        assert!(CovarianceQuery::new(12, 0, PrecisionMode::ExactRational).is_err());
        let big = CovarianceQuery::new(5000, 10, PrecisionMode::ExactRational).unwrap();
        assert_eq!(
            exact_fold_covariance(&big),
            Err(CvError::ExactCapExceeded { n: 5000, cap: 4096 })
        );
        let big_log = CovarianceQuery::new(5000, 10, PrecisionMode::LogSpaceFloat).unwrap();
        assert!(exact_fold_covariance(&big_log).unwrap().to_f64() > 0.0);
    }

    #[test]
    fn covariance_examples() {
        // Values from exhaustive label enumeration (see oracle module).
        assert_eq!(cov(4, 2), ratio(1, 16));
        assert_eq!(cov(4, 1), ratio(1, 8));
        assert_eq!(cov(6, 2), ratio(3, 64));
        assert_eq!(cov(6, 3), ratio(1, 16));
        assert_eq!(cov(12, 4), ratio(95, 4096));
    }

    #[test]
    fn mse_examples() {
        let mse = |n, k| exact_cv_mse(&FoldScheme::new(n, k).unwrap()).unwrap();
        assert_eq!(mse(4, 2), ratio(3, 32));
        assert_eq!(mse(6, 3), ratio(7, 96));
        assert_eq!(mse(6, 2), ratio(7, 96));
        assert_eq!(mse(6, 6), ratio(23, 192));
        assert_eq!(mse(12, 3), ratio(446, 12288));
    }

    #[test]
    fn endpoint_examples() {
        assert_eq!(endpoint_cov_m1(4).unwrap(), ratio(1, 8));
        assert_eq!(endpoint_cov_m1(6).unwrap(), ratio(3, 32));
        assert_eq!(endpoint_cov_m1(2).unwrap(), ratio(1, 4));
        assert_eq!(endpoint_cov_half(4).unwrap(), ratio(1, 16));
        assert_eq!(endpoint_cov_half(6).unwrap(), ratio(1, 16));
        assert_eq!(endpoint_cov_half(12).unwrap(), ratio(25, 1024));
        assert_eq!(endpoint_cov_half(7), Err(CvError::OddSampleSize { n: 7 }));
        assert!(endpoint_cov_m1(1).is_err());
    }

    #[test]
    fn endpoints_match_general_formula() {
        for n in 2..=300u64 {
            assert_eq!(endpoint_cov_m1(n).unwrap(), cov(n, 1), "m=1, n={n}");
            if n % 2 == 0 {
                assert_eq!(endpoint_cov_half(n).unwrap(), cov(n, n / 2), "m=n/2, n={n}");
            }
        }
    }

    #[test]
    fn conditional_identity_examples() {
        assert_eq!(conditional_cov_identity(2, 1), (ratio(1, 4), ratio(1, 4)));
        assert_eq!(conditional_cov_identity(1, 0), (ratio(1, 4), ratio(1, 4)));
        assert_eq!(conditional_cov_identity(3, 5), (ratio(0, 1), ratio(0, 1)));
        // Normalized by m: Cov(X/2, 1{X >= 2}) = 1/8.
        assert_eq!(conditional_cov_identity(2, 1).0 * ratio(1, 2), ratio(1, 8));
    }

    #[test]
    fn conditional_identity_holds_everywhere() {
        for m in 1..=64u64 {
            for a in -2..=(m as i64 + 2) {
                let (lhs, rhs) = conditional_cov_identity(m, a);
                assert_eq!(lhs, rhs, "m={m} a={a}");
            }
        }
    }

    #[test]
    fn central_mass_examples() {
        assert_eq!(central_binomial_mass(0), ratio(1, 1));
        assert_eq!(central_binomial_mass(1), ratio(1, 2));
        assert_eq!(central_binomial_mass(2), ratio(3, 8));
    }

    #[test]
    fn weight_moments() {
        assert_eq!(hypergeom_weight_moments(1), (ratio(1, 2), ratio(1, 4)));
        assert_eq!(hypergeom_weight_moments(2), (ratio(1, 1), ratio(1, 3)));
        assert_eq!(hypergeom_weight_moments(0), (ratio(0, 1), ratio(0, 1)));
        for r in 0..=200u64 {
            assert_eq!(
                hypergeom_weight_moments(r),
                hypergeom_weight_moments_by_summation(r),
                "r={r}"
            );
        }
    }

    #[test]
    fn summand_reflection_symmetry_for_odd_n_minus_m() {
        // j -> m-1-j maps C(N, l-j) onto C(N, N-(l-j)) exactly when n-m is odd.
        for n in 2..=120u64 {
            for m in (1..=n / 2).filter(|m| n % m == 0) {
                let terms = covariance_summands(n, m);
                let reversed: Vec<_> = terms.iter().rev().cloned().collect();
                if (n - m) % 2 == 1 {
                    assert_eq!(terms, reversed, "n={n} m={m}");
                }
            }
        }
        // Even n-m breaks the reflection: n=6, m=2 has summands [1, 2].
        assert_eq!(
            covariance_summands(6, 2),
            vec![BigUint::from(1u32), BigUint::from(2u32)]
        );
    }

    #[test]
    fn log_space_agrees_with_rational() {
        let mut worst = 0f64;
        for n in (2..=4096u64).step_by(37).chain([4096, 4095, 4094, 3000]) {
            for m in (1..=n / 2).filter(|m| n % m == 0) {
                let exact = cov(n, m);
                let log = fold_covariance_log(n, m);
                let rel = (log / exact.to_f64() - 1.0).abs();
                worst = worst.max(rel);
                assert!(rel <= 1e-10, "n={n} m={m} rel={rel:e}");
            }
        }
        assert!(worst < 1e-12, "worst {worst:e}");
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "rational".parse::<PrecisionMode>().unwrap(),
            PrecisionMode::ExactRational
        );
        assert_eq!("LOG".parse::<PrecisionMode>().unwrap(), PrecisionMode::LogSpaceFloat);
        assert!("fast".parse::<PrecisionMode>().is_err());
    }
}
