//! Brute-force referees for the closed forms: exhaustive enumeration of label
//! vectors for small `n`, and an exact convolution over fold label counts.
//!
//! Labels are i.i.d. uniform throughout, so every constant hypothesis has
//! population risk exactly 1/2.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial::binomial_row;
use crate::config::LabConfig;
use crate::error::{CvError, Result};
use crate::exact::FoldScheme;
use crate::rational::{ratio, ExactRational};
use crate::sim::{AlgorithmSpec, TiePolicy};

/// Exact moments of the CV estimate and of individual fold losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub mse: ExactRational,
    /// `Cov(L_1, L_2)` for two distinct hold-out folds.
    pub fold_covariance: ExactRational,
    pub fold_variance: ExactRational,
    /// `E[L_cv]`.
    pub estimator_mean: ExactRational,
}

#[derive(Debug, Clone, Copy, Default)]
struct BitstringSums {
    e1: u128,
    e2: u128,
    e1_sq: u128,
    e1_e2: u128,
    total: u128,
    centred_sq: u128,
}

impl BitstringSums {
    fn merge(mut self, other: Self) -> Self {
        self.e1 += other.e1;
        self.e2 += other.e2;
        self.e1_sq += other.e1_sq;
        self.e1_e2 += other.e1_e2;
        self.total += other.total;
        self.centred_sq += other.centred_sq;
        self
    }
}

pub fn bitstring_cv_oracle(scheme: &FoldScheme, algorithm: &AlgorithmSpec) -> Result<OracleResult> {
    bitstring_cv_oracle_with(scheme, algorithm, &LabConfig::default())
}

/// Enumerates all `2^n` label vectors, folds being consecutive index blocks.
pub fn bitstring_cv_oracle_with(
    scheme: &FoldScheme,
    algorithm: &AlgorithmSpec,
    config: &LabConfig,
) -> Result<OracleResult> {
    let (n, k, m) = (scheme.n(), scheme.k(), scheme.m());
    if n > config.brute_force_cap {
        return Err(CvError::BruteForceCapExceeded {
            n,
            cap: config.brute_force_cap,
        });
    }
    if !algorithm.is_label_count_constant() {
        return Err(CvError::IncompatibleAlgorithm {
            algorithm: algorithm.to_string(),
            data: "uniform random labels".into(),
        });
    }
    let fold_mask = (1u64 << m) - 1;
    let chunk_bits = n.min(10);
    let per_chunk = 1u64 << (n - chunk_bits);
    let partials: Vec<BitstringSums> = (0..1u64 << chunk_bits)
        .into_par_iter()
        .map(|chunk| {
            let mut sums = BitstringSums::default();
            let mut errors = vec![0u64; k as usize];
            for labels in chunk * per_chunk..(chunk + 1) * per_chunk {
                let total_ones = labels.count_ones() as u64;
                let mut all_errors = 0;
                for (i, slot) in errors.iter_mut().enumerate() {
                    let fold_ones = ((labels >> (i as u64 * m)) & fold_mask).count_ones() as u64;
                    let label = match algorithm.train(total_ones - fold_ones, n - m, n) {
                        crate::sim::Hypothesis::Constant(label) => label,
                        crate::sim::Hypothesis::Interval { .. } => unreachable!("checked above"),
                    };
                    *slot = if label == 0 { fold_ones } else { m - fold_ones };
                    all_errors += *slot;
                }
                let (e1, e2) = (errors[0] as u128, errors[1] as u128);
                sums.e1 += e1;
                sums.e2 += e2;
                sums.e1_sq += e1 * e1;
                sums.e1_e2 += e1 * e2;
                sums.total += all_errors as u128;
                let centred = (2 * all_errors as i128 - n as i128).unsigned_abs();
                sums.centred_sq += centred * centred;
            }
            sums
        })
        .collect();
    let sums = partials
        .into_iter()
        .fold(BitstringSums::default(), BitstringSums::merge);

    let mean = |s: u128| ExactRational::dyadic(BigInt::from(s), n);
    let m_sq = ExactRational::from_integer(m * m);
    let fold_variance = (mean(sums.e1_sq) - mean(sums.e1) * mean(sums.e1)) / m_sq.clone();
    let fold_covariance = (mean(sums.e1_e2) - mean(sums.e1) * mean(sums.e2)) / m_sq;
    let estimator_mean = mean(sums.total) / ExactRational::from_integer(n);
    // (L_cv - 1/2)^2 = (2 E - n)^2 / (4 n^2)
    let mse = mean(sums.centred_sq) / ExactRational::from_integer(4 * n * n);
    Ok(OracleResult {
        mse,
        fold_covariance,
        fold_variance,
        estimator_mean,
    })
}

pub fn count_cv_oracle(scheme: &FoldScheme) -> Result<OracleResult> {
    count_cv_oracle_with(scheme, TiePolicy::ToZero, &LabConfig::default())
}

/// Exact fold-loss moments of Majority from the label counts `X1, X2` of two
/// folds and `Y` of the remaining `n - 2m` examples.
///
/// For fixed `(x1, x2)` each fold model switches from `h0` to `h1` at one
/// threshold in `y`, so the sum over `y` splits into at most three runs,
/// each read off prefix sums of the `Bin(n - 2m)` row.
pub fn count_cv_oracle_with(scheme: &FoldScheme, tie: TiePolicy, config: &LabConfig) -> Result<OracleResult> {
    let (n, k, m) = (scheme.n(), scheme.k(), scheme.m());
    if m > config.count_oracle_m_cap {
        return Err(CvError::InvalidArgument(format!(
            "count oracle needs m <= {} (m = {m})",
            config.count_oracle_m_cap
        )));
    }
    let rest = n - 2 * m;
    let fold_row = binomial_row(m);
    let rest_prefix = prefix_sums(&binomial_row(rest));
    // Smallest complement label count for which the fold model is h1.
    let switch = (0..=n - m)
        .find(|&ones| tie.majority_label(ones, n - m) == 1)
        .unwrap_or(n - m + 1);

    let rows: Vec<BigUint> = (0..=m)
        .into_par_iter()
        .map(|x1| {
            let mut acc = BigUint::zero();
            for (x2, w2) in fold_row.iter().enumerate() {
                let x2 = x2 as u64;
                let t1 = switch.saturating_sub(x2).min(rest + 1);
                let t2 = switch.saturating_sub(x1).min(rest + 1);
                let (lo, hi) = (t1.min(t2), t1.max(t2));
                let mut inner = BigUint::zero();
                for (a, b) in [(0, lo), (lo, hi), (hi, rest + 1)] {
                    if b <= a {
                        continue;
                    }
                    let e1 = if a < t1 { x1 } else { m - x1 };
                    let e2 = if a < t2 { x2 } else { m - x2 };
                    inner += (&rest_prefix[b as usize] - &rest_prefix[a as usize]) * (e1 * e2);
                }
                acc += inner * w2;
            }
            acc * &fold_row[x1 as usize]
        })
        .collect();
    let joint: BigUint = rows.iter().sum();

    // One fold against its complement: the model depends only on the complement count.
    let complement_row = binomial_row(n - m);
    let below: BigUint = complement_row.iter().take(switch as usize).sum();
    let above: BigUint = complement_row.iter().skip(switch as usize).sum();
    let (mut first, mut second) = (BigUint::zero(), BigUint::zero());
    for (x, w) in fold_row.iter().enumerate() {
        let x = x as u64;
        let (e_zero, e_one) = (x, m - x);
        first += w * (&below * e_zero + &above * e_one);
        second += w * (&below * (e_zero * e_zero) + &above * (e_one * e_one));
    }

    let mean = |s: BigUint| ExactRational::dyadic(BigInt::from(s), n);
    let e1 = mean(first);
    let m_sq = ExactRational::from_integer(m * m);
    let fold_variance = (mean(second) - e1.clone() * e1.clone()) / m_sq.clone();
    let fold_covariance = (mean(joint) - e1.clone() * e1.clone()) / m_sq;
    let estimator_mean = e1 / ExactRational::from_integer(m);
    let kr = ExactRational::from_integer(k);
    let variance =
        fold_variance.clone() / kr.clone() + (kr.clone() - ExactRational::one()) / kr * fold_covariance.clone();
    let bias = estimator_mean.clone() - ratio(1, 2);
    let mse = variance + bias.clone() * bias;
    Ok(OracleResult {
        mse,
        fold_covariance,
        fold_variance,
        estimator_mean,
    })
}

fn prefix_sums(row: &[BigUint]) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(row.len() + 1);
    out.push(BigUint::zero());
    for w in row {
        let next = out.last().unwrap() + w;
        out.push(next);
    }
    out
}

/// Fold covariance computed two ways for Majority with ties to `h0`:
/// directly by the count oracle, and as
/// `4 E_Y[Cov(X1/m, 1{X1 > (n-m)/2 - Y} | Y)^2]` with `Y ~ Bin(n - 2m, 1/2)`.
pub fn factorization_check(scheme: &FoldScheme) -> Result<(ExactRational, ExactRational)> {
    let direct = count_cv_oracle(scheme)?.fold_covariance;
    let (n, m) = (scheme.n(), scheme.m());
    let rest = n - 2 * m;
    let fold_row = binomial_row(m);
    // Suffix sums of C(m,x) and x C(m,x).
    let mut tail_count = vec![BigUint::zero(); m as usize + 2];
    let mut tail_first = vec![BigUint::zero(); m as usize + 2];
    for x in (0..=m as usize).rev() {
        tail_count[x] = &tail_count[x + 1] + &fold_row[x];
        tail_first[x] = &tail_first[x + 1] + &fold_row[x] * x as u64;
    }
    let mut total = BigUint::zero();
    for (y, w) in binomial_row(rest).iter().enumerate() {
        // Indicator is 1 iff 2x > n - m - 2y.
        let slack = (n - m) as i64 - 2 * y as i64;
        let cut = if slack < 0 {
            0
        } else {
            (slack / 2 + 1).min(m as i64 + 1)
        } as usize;
        // 2^(2m+2) m^2 Cov(X/m, I)^2 = (2A - mB)^2 with A = E-sum of X I, B = sum of I.
        let diff = BigInt::from(&tail_first[cut] * 2u32) - BigInt::from(&tail_count[cut] * m);
        total += w * (diff.magnitude() * diff.magnitude());
    }
    let factored = ExactRational::dyadic(BigInt::from(total), n) / ExactRational::from_integer(m * m);
    Ok((direct, factored))
}

/// `sum_y C(n, y) f(y)` via the multiplicative row recurrence, walking
/// only `y <= n/2` and pairing each term with its mirror `n - y`.
fn binomial_weighted_sum(n: u64, f: impl Fn(u64) -> u64) -> BigUint {
    let mut term = BigUint::from(1u32);
    let mut acc = BigUint::zero();
    for y in 0..=n / 2 {
        let weight = if 2 * y == n { f(y) } else { f(y) + f(n - y) };
        acc += &term * weight;
        term *= n - y;
        term /= y + 1;
    }
    acc
}

/// `E[(Y/n - 1/2)^2]` for `Y ~ Bin(n, 1/2)`: the MSE of the training error of
/// Majority used as a risk estimate.
pub fn empirical_error_mse(n: u64) -> ExactRational {
    assert!(n >= 1, "n must be positive");
    let sum = binomial_weighted_sum(n, |y| (2 * y).abs_diff(n).pow(2));
    ExactRational::dyadic(BigInt::from(sum), n) / ExactRational::from_integer(4 * n * n)
}

/// MSE of an independent size-`n` validation set scoring a risk-1/2 classifier:
/// `E[(1/2 - E/n)^2]` with error count `E ~ Bin(n, 1/2)`.
pub fn holdout_mse(n: u64) -> ExactRational {
    assert!(n >= 1, "n must be positive");
    let sum = binomial_weighted_sum(n, |errors| n.abs_diff(2 * errors).pow(2));
    let expectation = ExactRational::dyadic(BigInt::from(sum), n);
    expectation / ExactRational::from_integer(4 * n * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::fold_covariance_rational;

    fn scheme(n: u64, k: u64) -> FoldScheme {
        FoldScheme::new(n, k).unwrap()
    }

    fn majority() -> AlgorithmSpec {
        AlgorithmSpec::majority(TiePolicy::ToZero)
    }

    #[test]
    fn bitstring_examples() {
        let r = bitstring_cv_oracle(&scheme(4, 2), &majority()).unwrap();
        assert_eq!(r.mse, ratio(3, 32));
        let r = bitstring_cv_oracle(&scheme(2, 2), &AlgorithmSpec::constant(0)).unwrap();
        assert_eq!(r.mse, ratio(1, 8));
        let r = bitstring_cv_oracle(&scheme(6, 3), &majority()).unwrap();
        assert_eq!((r.mse, r.fold_covariance), (ratio(7, 96), ratio(3, 64)));
    }

    #[test]
    fn bitstring_rejections() {
        assert_eq!(
            bitstring_cv_oracle(&scheme(22, 2), &majority()),
            Err(CvError::BruteForceCapExceeded { n: 22, cap: 20 })
        );
        assert!(bitstring_cv_oracle(&scheme(4, 2), &AlgorithmSpec::anticorr_interval()).is_err());
    }

    #[test]
    fn count_examples() {
        assert_eq!(
            count_cv_oracle(&scheme(12, 3)).unwrap().fold_covariance,
            ratio(95, 4096)
        );
        assert_eq!(
            count_cv_oracle(&scheme(12, 2)).unwrap().fold_covariance,
            ratio(25, 1024)
        );
        assert_eq!(count_cv_oracle(&scheme(4, 4)).unwrap().fold_covariance, ratio(1, 8));
    }

    #[test]
    fn count_oracle_matches_closed_form_beyond_brute_force() {
        for (n, k) in [(60, 3), (100, 4), (240, 2), (300, 10), (1024, 2)] {
            let s = scheme(n, k);
            let r = count_cv_oracle(&s).unwrap();
            assert_eq!(r.fold_covariance, fold_covariance_rational(n, s.m()), "n={n} k={k}");
            assert_eq!(
                r.fold_variance,
                ExactRational::from_integer(1) / ExactRational::from_integer(4 * s.m())
            );
            assert_eq!(r.estimator_mean, ratio(1, 2));
        }
        assert!(count_cv_oracle(&scheme(2048, 2)).is_err());
    }

    #[test]
    fn factorization_examples() {
        assert_eq!(
            factorization_check(&scheme(6, 3)).unwrap(),
            (ratio(3, 64), ratio(3, 64))
        );
        assert_eq!(
            factorization_check(&scheme(4, 2)).unwrap(),
            (ratio(1, 16), ratio(1, 16))
        );
        let (d, f) = factorization_check(&scheme(8, 4)).unwrap();
        assert_eq!(d, f);
    }

    #[test]
    fn weighted_sum_matches_row() {
        for n in 0..60u64 {
            let f = |y: u64| y * y + 3 * y + 1;
            let expected: BigUint = binomial_row(n).iter().enumerate().map(|(y, c)| c * f(y as u64)).sum();
            assert_eq!(binomial_weighted_sum(n, f), expected, "n={n}");
        }
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(empirical_error_mse(1), ratio(1, 4));
        assert_eq!(empirical_error_mse(2), ratio(1, 8));
        assert_eq!(empirical_error_mse(4), ratio(1, 16));
        assert_eq!(holdout_mse(1), ratio(1, 4));
        assert_eq!(holdout_mse(4), ratio(1, 16));
        assert_eq!(holdout_mse(100), ratio(1, 400));
    }
}
