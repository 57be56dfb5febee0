//! The acceptance criteria as executable checks, grouped into suites.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    argmin_cov_with, argmin_mse_with, divisors, gap_ratio_with, minimax_table_with, monotonicity_check_with,
};
use crate::asymptotics::{leading_term, llt_envelope, triple_gaussian_lattice_sum_with, LatticeMode};
use crate::config::LabConfig;
use crate::error::{CvError, Result};
use crate::exact::{
    conditional_cov_identity, endpoint_cov_half, endpoint_cov_m1, exact_cv_mse_with, exact_fold_covariance_with,
    fold_covariance_log, fold_covariance_rational, CovValue, CovarianceQuery, FoldScheme, PrecisionMode,
};
use crate::oracle::{bitstring_cv_oracle_with, count_cv_oracle_with, factorization_check};
use crate::rational::{ratio, ExactRational};
use crate::sim::{exact_hypothesis_stability, loss_stability_anticorr, run_cv_mse, AlgorithmSpec, DataSpec, TiePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    Exact,
    Asymptotic,
    Simulate,
    All,
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::Exact => vec![1, 2, 3, 4, 9, 10],
            Suite::Asymptotic => vec![5, 6, 7, 8],
            Suite::Simulate => vec![11, 12, 13],
            Suite::All => (1..=13).collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Suite::Exact),
            "asymptotic" => Ok(Suite::Asymptotic),
            "simulate" => Ok(Suite::Simulate),
            "all" => Ok(Suite::All),
            other => Err(CvError::Parse(format!(
                "unknown suite {other:?} (expected exact|asymptotic|simulate|all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Exact => "exact",
            Suite::Asymptotic => "asymptotic",
            Suite::Simulate => "simulate",
            Suite::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    /// Measured value next to its target.
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:>2} {:<28} {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const CRITERION_NAMES: [&str; 13] = [
    "exact-vs-brute-force",
    "oracle-cross-agreement",
    "endpoint-identities",
    "conditional-cov-identity",
    "asymptotic-regime",
    "endpoint-asymptotic",
    "poisson-summation",
    "llt-envelope",
    "minimizers",
    "gap-ratio",
    "anticorr-counterexample",
    "stability-law",
    "monte-carlo-calibration",
];

/// Runs one criterion by number (1 to 13).
pub fn run_criterion(id: u8, config: &LabConfig) -> CriterionOutcome {
    let start = Instant::now();
    let checked: Result<(bool, String)> = match id {
        1 => exact_vs_brute_force(config),
        2 => oracle_cross_agreement(config),
        3 => endpoint_identities(config),
        4 => conditional_identity(),
        5 => asymptotic_regime(config),
        6 => endpoint_asymptotic(),
        7 => poisson_summation(config),
        8 => llt_envelope_check(),
        9 => minimizers(config),
        10 => gap_and_minimax(config),
        11 => anticorr_counterexample(),
        12 => stability_law(config),
        13 => monte_carlo_calibration(),
        _ => Err(CvError::InvalidArgument(format!("no criterion {id}"))),
    };
    let (passed, detail) = checked.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        name: CRITERION_NAMES
            .get(id as usize - 1)
            .copied()
            .unwrap_or("unknown")
            .to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_suite(suite: Suite, config: &LabConfig) -> Vec<CriterionOutcome> {
    suite
        .criteria()
        .into_iter()
        .map(|id| run_criterion(id, config))
        .collect()
}

fn schemes_up_to(n_max: u64) -> Vec<FoldScheme> {
    (2..=n_max)
        .flat_map(|n| {
            divisors(n)
                .into_iter()
                .filter(|&k| k >= 2)
                .map(move |k| FoldScheme::new(n, k).unwrap())
        })
        .collect()
}

fn exact_vs_brute_force(config: &LabConfig) -> Result<(bool, String)> {
    let start = Instant::now();
    let schemes = schemes_up_to(16);
    let majority = AlgorithmSpec::majority(TiePolicy::ToZero);
    let mut mismatches = Vec::new();
    for s in &schemes {
        let oracle = bitstring_cv_oracle_with(s, &majority, config)?;
        let query = CovarianceQuery::for_scheme(s, PrecisionMode::ExactRational)?;
        let cov = exact_fold_covariance_with(&query, config)?;
        let mse = exact_cv_mse_with(s, config)?;
        if cov != CovValue::Exact(oracle.fold_covariance) || mse != oracle.mse {
            mismatches.push((s.n(), s.k()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        mismatches.is_empty() && secs <= 60.0,
        format!(
            "{} schemes n<=16, mismatches {:?}, {secs:.1}s (limit 60s)",
            schemes.len(),
            mismatches
        ),
    ))
}

fn oracle_cross_agreement(config: &LabConfig) -> Result<(bool, String)> {
    let schemes = schemes_up_to(20);
    let majority = AlgorithmSpec::majority(TiePolicy::ToZero);
    let mut mismatches = Vec::new();
    for s in &schemes {
        let brute = bitstring_cv_oracle_with(s, &majority, config)?;
        let count = count_cv_oracle_with(s, TiePolicy::ToZero, config)?;
        let (direct, factored) = factorization_check(s)?;
        if brute.fold_covariance != count.fold_covariance || brute.mse != count.mse || direct != factored {
            mismatches.push((s.n(), s.k()));
        }
    }
    Ok((
        mismatches.is_empty(),
        format!("{} schemes n<=20, mismatches {:?}", schemes.len(), mismatches),
    ))
}

fn endpoint_identities(config: &LabConfig) -> Result<(bool, String)> {
    let exact_bad: Vec<u64> = (2..=1000u64)
        .into_par_iter()
        .filter(|&n| {
            let m1 = endpoint_cov_m1(n).unwrap() != fold_covariance_rational(n, 1);
            let half = n % 2 == 0 && endpoint_cov_half(n).unwrap() != fold_covariance_rational(n, n / 2);
            m1 || half
        })
        .collect();
    let cap = config.exact_n_cap;
    let rel = |a: &ExactRational, b: f64| (b / a.to_f64() - 1.0).abs();
    let worst = (1001..=cap)
        .into_par_iter()
        .map(|n| {
            let mut w = rel(&endpoint_cov_m1(n).unwrap(), fold_covariance_log(n, 1));
            if n % 2 == 0 {
                w = w.max(rel(&endpoint_cov_half(n).unwrap(), fold_covariance_log(n, n / 2)));
            }
            w
        })
        .reduce(|| 0.0, f64::max);
    Ok((
        exact_bad.is_empty() && worst <= 1e-10,
        format!(
            "exact mismatches n<=1000: {:?}; log-space worst rel err 1001..={cap}: {worst:.2e} (limit 1e-10)",
            exact_bad
        ),
    ))
}

fn conditional_identity() -> Result<(bool, String)> {
    let bad: Vec<(u64, i64)> = (1..=64u64)
        .flat_map(|m| (-2..=m as i64 + 2).map(move |a| (m, a)))
        .filter(|&(m, a)| {
            let (lhs, rhs) = conditional_cov_identity(m, a);
            lhs != rhs
        })
        .collect();
    Ok((bad.is_empty(), format!("m<=64, a in [-2, m+2]; mismatches {bad:?}")))
}

/// Up to `count` evenly spaced entries of `items`, endpoints included.
fn spread<T: Copy>(items: &[T], count: usize) -> Vec<T> {
    if items.len() <= count {
        return items.to_vec();
    }
    (0..count).map(|i| items[i * (items.len() - 1) / (count - 1)]).collect()
}

fn asymptotic_regime(config: &LabConfig) -> Result<(bool, String)> {
    let start = Instant::now();
    let mut pairs = Vec::new();
    for n in [10_000u64, 100_000, 1_000_000] {
        let eligible: Vec<u64> = divisors(n).into_iter().filter(|&m| m >= 50 && 3 * m <= n).collect();
        pairs.extend(spread(&eligible, 20).into_iter().map(|m| (n, m)));
    }
    let errs: Vec<(f64, (u64, u64))> = pairs
        .par_iter()
        .map(|&(n, m)| {
            let exact = if n <= config.exact_n_cap {
                fold_covariance_rational(n, m).to_f64()
            } else {
                fold_covariance_log(n, m)
            };
            ((exact / leading_term(n, m).unwrap() - 1.0).abs(), (n, m))
        })
        .collect();
    let (worst, at) = errs
        .into_iter()
        .fold((0.0, (0, 0)), |b, c| if c.0 > b.0 { c } else { b });
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 0.05 && secs <= 120.0,
        format!(
            "{} pairs, worst |exact/M - 1| = {worst:.4} at {at:?} (limit 0.05), {secs:.1}s",
            pairs.len()
        ),
    ))
}

fn endpoint_asymptotic() -> Result<(bool, String)> {
    let ns: Vec<u64> = (100..=5000).step_by(2).collect();
    let scaled: Vec<(f64, u64)> = ns
        .par_iter()
        .map(|&n| {
            let cov = endpoint_cov_half(n).unwrap().to_f64();
            (n as f64 * (cov * PI * (n - 2) as f64 - 1.0).abs(), n)
        })
        .collect();
    let (worst, at) = scaled.into_iter().fold((0.0, 0), |b, c| if c.0 > b.0 { c } else { b });
    Ok((
        worst <= 3.0,
        format!("max n|Cov(n,n/2) pi (n-2) - 1| = {worst:.4} at n={at} over even n in [100,5000] (limit 3)"),
    ))
}

fn lattice_pairs() -> Vec<(u64, u64)> {
    let ns = [30u64, 31, 97, 300, 1001, 4096, 12_345, 100_000, 777_777, 1_000_000];
    ns.iter()
        .flat_map(|&n| {
            let top = n / 3;
            [2, 3.max(top / 50), 3.max(top / 7), 3.max(top / 2), top]
                .into_iter()
                .map(move |m| (n, m))
        })
        .collect()
}

fn poisson_summation(config: &LabConfig) -> Result<(bool, String)> {
    let pairs = lattice_pairs();
    let mut worst: (f64, (u64, u64)) = (0.0, (0, 0));
    for &(n, m) in &pairs {
        let direct = triple_gaussian_lattice_sum_with(n, m, LatticeMode::Direct, config)?;
        let theta = triple_gaussian_lattice_sum_with(n, m, LatticeMode::ThetaForm, config)?;
        let rel = (direct / theta - 1.0).abs();
        if rel > worst.0 {
            worst = (rel, (n, m));
        }
    }
    Ok((
        worst.0 <= 1e-12 && pairs.len() == 50,
        format!(
            "{} pairs, worst rel diff {:.2e} at {:?} (limit 1e-12)",
            pairs.len(),
            worst.0,
            worst.1
        ),
    ))
}

fn llt_envelope_check() -> Result<(bool, String)> {
    let envelope = llt_envelope(2, 5000);
    let scaled = |&(r, e): &(u64, f64)| e * (r as f64).powf(1.5);
    let small = envelope
        .iter()
        .filter(|(r, _)| *r <= 50)
        .map(scaled)
        .fold(0.0, f64::max);
    let all = envelope.iter().map(scaled).fold(0.0, f64::max);
    Ok((
        all.is_finite() && all <= 2.0 * small,
        format!("max r^1.5 err: [2,5000] {all:.5}, [2,50] {small:.5} (need <= 2x)"),
    ))
}

fn minimizers(config: &LabConfig) -> Result<(bool, String)> {
    let mut failures = Vec::new();
    for n in [100u64, 500, 1000, 2000] {
        let (ks, _) = argmin_mse_with(n, config)?;
        if ks != [2] {
            failures.push(format!("argmin_mse({n}) = {ks:?}"));
        }
    }
    for n in [60u64, 300, 600, 1200] {
        let (ks, _) = argmin_cov_with(n, config)?;
        if ks != [3] {
            failures.push(format!("argmin_cov({n}) = {ks:?}"));
        }
    }
    for n in [120u64, 720, 2520] {
        let report = monotonicity_check_with(n, config.monotonicity_threshold, config)?;
        if !(report.enforced && report.holds()) {
            failures.push(format!("monotonicity({n}) violated at {:?}", report.first_violation));
        }
    }
    let (tie, value) = argmin_mse_with(6, config)?;
    if tie != [2, 3] || value != CovValue::Exact(ratio(7, 96)) {
        failures.push(format!("argmin_mse(6) = {tie:?}, {value}"));
    }
    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            "all minimizer, monotonicity and tie checks hold".into()
        } else {
            failures.join("; ")
        },
    ))
}

fn gap_and_minimax(config: &LabConfig) -> Result<(bool, String)> {
    let target = 1.0 + 2.0 / PI;
    let ratio_value = gap_ratio_with(10_000, config)?;
    let minimax_target = 0.25 + 1.0 / (2.0 * PI);
    let rows = minimax_table_with(&[1000, 2000, 4000, 10_000], config)?;
    let worst = rows
        .iter()
        .map(|r| (r.scaled - minimax_target).abs())
        .fold(0.0, f64::max);
    Ok((
        (ratio_value - target).abs() <= 0.01 && worst <= 0.02,
        format!("gap_ratio(1e4) = {ratio_value:.5} vs {target:.5}; minimax worst |MSE n - {minimax_target:.4}| = {worst:.4}"),
    ))
}

fn anticorr_counterexample() -> Result<(bool, String)> {
    let (beta, mse) = loss_stability_anticorr(2)?;
    let exact_ok = beta == ratio(1, 4) && mse == ratio(0, 1);
    let mut nonzero = Vec::new();
    for n in [4u64, 8, 12] {
        for k in divisors(n).into_iter().filter(|&k| k >= 2) {
            let est = run_cv_mse(
                &DataSpec::uniform_threshold(n),
                &AlgorithmSpec::anticorr_interval(),
                k,
                2_000,
                n * 100 + k,
            )?;
            if est.mean != 0.0 || est.std_error != 0.0 {
                nonzero.push((n, k, est.mean));
            }
        }
    }
    Ok((
        exact_ok && nonzero.is_empty(),
        format!("(beta, mse)(2) = ({beta}, {mse}); simulated nonzero MSE cases {nonzero:?}"),
    ))
}

fn stability_law(config: &LabConfig) -> Result<(bool, String)> {
    let (lo, hi) = config.calibration.stability_bracket;
    let mut scaled = Vec::new();
    for n in [100u64, 400, 1600] {
        for m in [n / 100, n / 10, n / 2] {
            let h = exact_hypothesis_stability(n, m, TiePolicy::ToZero).to_f64();
            scaled.push(h * (n as f64 / m as f64).sqrt());
        }
    }
    let (min, max) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let mut sim_ok = true;
    let mut sim_detail = Vec::new();
    for (n, k, seed) in [(10u64, 5u64, 101u64), (100, 10, 102)] {
        let est = run_cv_mse(
            &DataSpec::point_mass(0.5, n)?,
            &AlgorithmSpec::constant(0),
            k,
            100_000,
            seed,
        )?;
        let target = 0.25 / n as f64;
        sim_ok &= est.within(target, 3.0);
        sim_detail.push(format!("n={n}: {:.6} +- {:.6} vs {target}", est.mean, est.std_error));
    }
    Ok((
        min >= lo && max <= hi && sim_ok,
        format!(
            "stability*sqrt(n/m) in [{min:.4}, {max:.4}] (bracket [{lo}, {hi}]); constant sim {}",
            sim_detail.join(", ")
        ),
    ))
}

fn monte_carlo_calibration() -> Result<(bool, String)> {
    let majority = AlgorithmSpec::majority(TiePolicy::ToZero);
    let targets = [
        (
            "majority n=12 k=3",
            DataSpec::point_mass(0.5, 12)?,
            majority,
            3u64,
            446.0 / 12288.0,
        ),
        (
            "constant n=20 k=4",
            DataSpec::point_mass(0.5, 20)?,
            AlgorithmSpec::constant(0),
            4,
            0.25 / 20.0,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, data, algo, k, target) in targets {
        let hits = (0..100u64)
            .filter(|&run| {
                run_cv_mse(&data, &algo, k, 20_000, 10_000 + run)
                    .map(|e| e.within(target, 3.0))
                    .unwrap_or(false)
            })
            .count();
        ok &= hits >= 96;
        parts.push(format!("{name}: {hits}/100 within 3 SE"));
    }
    Ok((ok, format!("{} (need >= 96)", parts.join(", "))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_partition_criteria() {
        let mut ids: Vec<u8> = [Suite::Exact, Suite::Asymptotic, Suite::Simulate]
            .iter()
            .flat_map(|s| s.criteria())
            .collect();
        ids.sort();
        assert_eq!(ids, Suite::All.criteria());
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn lattice_grid_has_fifty_valid_pairs() {
        let pairs = lattice_pairs();
        assert_eq!(pairs.len(), 50);
        assert!(pairs.iter().all(|&(n, m)| m >= 2 && 3 * m <= n));
        assert!(pairs.iter().any(|&(n, m)| (n - m) % 2 == 0) && pairs.iter().any(|&(n, m)| (n - m) % 2 == 1));
    }

    #[test]
    fn spread_keeps_endpoints() {
        assert_eq!(spread(&[1, 2, 3], 20), vec![1, 2, 3]);
        let s = spread(&(0..100).collect::<Vec<_>>(), 5);
        assert_eq!(s, vec![0, 24, 49, 74, 99]);
    }

    #[test]
    fn unknown_criterion_fails_cleanly() {
        let out = run_criterion(14, &LabConfig::default());
        assert!(!out.passed);
    }

    #[test]
    fn quick_criteria_pass() {
        let cfg = LabConfig::default();
        for id in [4, 7] {
            let out = run_criterion(id, &cfg);
            assert!(out.passed, "{out}");
        }
    }
}
