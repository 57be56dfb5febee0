//! Exact stability quantities of Majority and of the interval construction.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::algorithm::TiePolicy;
use crate::binomial::binomial_row;
use crate::error::{CvError, Result};
use crate::rational::{ratio, ExactRational};

/// `P[Maj(S^{n-m}) != Maj(S^n)]` with labels i.i.d. Bernoulli(q).
///
/// Double sum over the reduced-sample count `Y' ~ Bin(n-m, q)` and the
/// added-block count `X ~ Bin(m, q)`; for each `Y'` the flipping `X` form a
/// contiguous range, summed through prefix sums.
pub fn majority_flip_probability(n: u64, m: u64, q: &ExactRational, tie: TiePolicy) -> ExactRational {
    assert!(m >= 1 && m < n, "need 1 <= m < n");
    assert!(!q.is_negative() && *q <= 1, "q must lie in [0, 1]");
    // q = a/b in lowest terms; P(Bin(r,q) = t) = C(r,t) a^t (b-a)^(r-t) / b^r.
    let a = q.numer().magnitude().clone();
    let b = q.denom().magnitude().clone();
    let c = &b - &a;
    let weights = |r: u64| -> Vec<BigUint> {
        let row = binomial_row(r);
        let a_pows = powers(&a, r);
        let c_pows = powers(&c, r);
        row.iter()
            .enumerate()
            .map(|(t, bin)| bin * &a_pows[t] * &c_pows[r as usize - t])
            .collect()
    };
    let reduced = weights(n - m);
    let added = weights(m);
    let mut prefix = Vec::with_capacity(added.len() + 1);
    prefix.push(BigUint::zero());
    for w in &added {
        let next = prefix.last().unwrap() + w;
        prefix.push(next);
    }
    let added_total = prefix.last().unwrap().clone();
    // Smallest full-sample count for which Majority outputs h1.
    let first_one = (0..=n).find(|&y| tie.majority_label(y, n) == 1).unwrap_or(n + 1);
    let mut flips = BigUint::zero();
    for (y_reduced, w) in reduced.iter().enumerate() {
        let y_reduced = y_reduced as u64;
        // X >= cut makes the full-sample output h1.
        let cut = first_one.saturating_sub(y_reduced).min(m + 1) as usize;
        let below_cut = &prefix[cut];
        let flipping = if tie.majority_label(y_reduced, n - m) == 0 {
            &added_total - below_cut
        } else {
            below_cut.clone()
        };
        flips += w * flipping;
    }
    ExactRational::new(BigInt::from(flips), BigInt::from(num_traits::pow(b, n as usize)))
}

fn powers(base: &BigUint, max: u64) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(max as usize + 1);
    let mut current = BigUint::one();
    for _ in 0..=max {
        out.push(current.clone());
        current *= base;
    }
    out
}

/// Hypothesis stability of Majority under uniform labels, with the
/// disagreement metric `P_x[h(x) != h'(x)]`. On the one-point distribution
/// that metric is the indicator of differing outputs, so this is the flip
/// probability at `q = 1/2`.
pub fn exact_hypothesis_stability(n: u64, m: u64, tie: TiePolicy) -> ExactRational {
    majority_flip_probability(n, m, &ratio(1, 2), tie)
}

/// Loss stability of Majority on the one-point distribution with label rate `q`:
/// the two constant hypotheses have risks `q` and `1 - q`.
pub fn exact_majority_loss_stability(n: u64, m: u64, q: &ExactRational, tie: TiePolicy) -> ExactRational {
    let gap = (ratio(1, 1) - q.clone() - q.clone()).abs();
    gap * majority_flip_probability(n, m, q, tie)
}

/// Loss stability and CV MSE of the interval construction at sample size `n`.
///
/// The reduced-sample hypothesis is always `h0` (risk 1/2) and the full-sample
/// one has risk `Y/n`, so `beta = E|Y/n - 1/2|`; the CV estimate equals `Y/n`
/// exactly, so the MSE is zero.
pub fn loss_stability_anticorr(n: u64) -> Result<(ExactRational, ExactRational)> {
    if n % 2 != 0 || n == 0 {
        return Err(CvError::OddSampleSize { n });
    }
    let row = binomial_row(n);
    // |Y/n - 1/2| = |2Y - n| / (2n)
    let total: BigUint = row
        .iter()
        .enumerate()
        .map(|(y, c)| c * (2 * y as i64 - n as i64).unsigned_abs())
        .sum();
    let beta = ExactRational::dyadic(BigInt::from(total), n) / ExactRational::from_integer(BigInt::from(2 * n));
    Ok((beta, ExactRational::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain double sum over (Y', X), no prefix sums.
    fn flip_by_enumeration(n: u64, m: u64, tie: TiePolicy) -> ExactRational {
        let reduced = binomial_row(n - m);
        let added = binomial_row(m);
        let mut total = BigUint::zero();
        for (yr, wr) in reduced.iter().enumerate() {
            for (x, wx) in added.iter().enumerate() {
                if tie.majority_label(yr as u64, n - m) != tie.majority_label(yr as u64 + x as u64, n) {
                    total += wr * wx;
                }
            }
        }
        ExactRational::dyadic(BigInt::from(total), n)
    }

    #[test]
    fn hypothesis_stability_examples() {
        assert_eq!(exact_hypothesis_stability(2, 1, TiePolicy::ToZero), ratio(1, 4));
        let v = exact_hypothesis_stability(100, 1, TiePolicy::ToZero).to_f64();
        assert!((0.2..=2.0).contains(&(v * 10.0)), "{v}");
        let h = |m| exact_hypothesis_stability(100, m, TiePolicy::ToZero);
        assert!(h(50) > h(10) && h(10) > h(1));
    }

    #[test]
    fn prefix_sums_match_enumeration() {
        for n in 2..=24u64 {
            for m in 1..n {
                for tie in [TiePolicy::ToZero, TiePolicy::ToOne] {
                    assert_eq!(
                        exact_hypothesis_stability(n, m, tie),
                        flip_by_enumeration(n, m, tie),
                        "n={n} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn biased_flip_probability_sums_correctly() {
        // q = 0 and q = 1 are deterministic: never flips.
        assert!(majority_flip_probability(10, 3, &ratio(0, 1), TiePolicy::ToZero).is_zero());
        assert!(majority_flip_probability(10, 3, &ratio(1, 1), TiePolicy::ToZero).is_zero());
        // n=2, m=1, q: flips when Y'=1, X=0 (ties to h0 at n=2): q(1-q).
        let q = ratio(2, 5);
        assert_eq!(majority_flip_probability(2, 1, &q, TiePolicy::ToZero), ratio(6, 25));
        assert_eq!(
            exact_majority_loss_stability(2, 1, &q, TiePolicy::ToZero),
            ratio(6, 125)
        );
    }

    #[test]
    fn anticorr_examples() {
        assert_eq!(loss_stability_anticorr(2).unwrap(), (ratio(1, 4), ratio(0, 1)));
        assert_eq!(loss_stability_anticorr(4).unwrap(), (ratio(3, 16), ratio(0, 1)));
        assert!(loss_stability_anticorr(3).is_err());
        // beta = Theta(1/sqrt(n)); the limit of beta sqrt(n) is 1/sqrt(2 pi).
        for n in [64u64, 256, 1024] {
            let scaled = loss_stability_anticorr(n).unwrap().0.to_f64() * (n as f64).sqrt();
            assert!((0.3..0.5).contains(&scaled), "n={n} scaled={scaled}");
        }
    }
}
