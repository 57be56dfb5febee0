//! Divisor sweeps over the fold count and the checks built on them:
//! minimizers, monotonicity in the fold size, the hold-out gap and the
//! minimax table.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::leading_term;
use crate::config::LabConfig;
use crate::error::{CvError, Result};
use crate::exact::{
    exact_fold_covariance_with, format_sig, mse_from_covariance_exact, mse_from_covariance_f64, CovValue,
    CovarianceQuery, FoldScheme, PrecisionMode,
};
use crate::rational::ExactRational;

/// One fold count of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub cov_exact: CovValue,
    pub mse_exact: CovValue,
    /// `None` for `m = 1`, where the leading term is undefined.
    pub cov_leading: Option<f64>,
    pub rel_err_leading: Option<f64>,
    /// `1/(4n)`.
    pub mse_holdout: ExactRational,
}

/// Divisors of `n` in ascending order, by trial division up to `sqrt(n)`.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Exact-rational mode up to the configured cap, log space beyond.
pub fn default_mode(n: u64, config: &LabConfig) -> PrecisionMode {
    if n <= config.exact_n_cap {
        PrecisionMode::ExactRational
    } else {
        PrecisionMode::LogSpaceFloat
    }
}

pub fn sweep(n: u64, mode: PrecisionMode) -> Result<Vec<SweepRow>> {
    sweep_with(n, mode, &LabConfig::default())
}

/// One row per divisor `k >= 2` of `n`, ascending in `k`.
pub fn sweep_with(n: u64, mode: PrecisionMode, config: &LabConfig) -> Result<Vec<SweepRow>> {
    if n < 2 {
        return Err(CvError::InvalidArgument(format!("sweep needs n >= 2 (n = {n})")));
    }
    let ks: Vec<u64> = divisors(n).into_iter().filter(|&k| k >= 2).collect();
    ks.par_iter().map(|&k| sweep_row(n, k, mode, config)).collect()
}

fn sweep_row(n: u64, k: u64, mode: PrecisionMode, config: &LabConfig) -> Result<SweepRow> {
    let scheme = FoldScheme::new(n, k)?;
    let m = scheme.m();
    let cov_exact = exact_fold_covariance_with(&CovarianceQuery::for_scheme(&scheme, mode)?, config)?;
    let mse_exact = match &cov_exact {
        CovValue::Exact(c) => CovValue::Exact(mse_from_covariance_exact(&scheme, c)),
        CovValue::Float(c) => CovValue::Float(mse_from_covariance_f64(&scheme, *c)),
    };
    let cov_leading = leading_term(n, m).ok();
    let rel_err_leading = cov_leading.map(|l| (l / cov_exact.to_f64() - 1.0).abs());
    let mse_holdout = ExactRational::from_integer(1) / ExactRational::from_integer(4 * n);
    Ok(SweepRow {
        n,
        k,
        m,
        cov_exact,
        mse_exact,
        cov_leading,
        rel_err_leading,
        mse_holdout,
    })
}

fn compare(a: &CovValue, b: &CovValue) -> Ordering {
    match (a, b) {
        (CovValue::Exact(x), CovValue::Exact(y)) => x.cmp(y),
        _ => a.to_f64().total_cmp(&b.to_f64()),
    }
}

/// All `k` attaining the minimum of `value`, ascending, with the minimum.
fn argmin_by(rows: &[SweepRow], value: impl Fn(&SweepRow) -> &CovValue) -> (Vec<u64>, CovValue) {
    let best = rows
        .iter()
        .map(&value)
        .min_by(|a, b| compare(a, b))
        .expect("sweep has at least one row")
        .clone();
    let ks = rows
        .iter()
        .filter(|r| compare(value(r), &best) == Ordering::Equal)
        .map(|r| r.k)
        .collect();
    (ks, best)
}

/// Fold counts minimizing the CV MSE. Ties are returned in full.
pub fn argmin_mse(n: u64) -> Result<(Vec<u64>, CovValue)> {
    argmin_mse_with(n, &LabConfig::default())
}

pub fn argmin_mse_with(n: u64, config: &LabConfig) -> Result<(Vec<u64>, CovValue)> {
    if n % 2 != 0 {
        return Err(CvError::OddSampleSize { n });
    }
    let rows = sweep_with(n, default_mode(n, config), config)?;
    Ok(argmin_by(&rows, |r| &r.mse_exact))
}

/// Fold counts minimizing the fold covariance, for `3 | n`.
pub fn argmin_cov(n: u64) -> Result<(Vec<u64>, CovValue)> {
    argmin_cov_with(n, &LabConfig::default())
}

pub fn argmin_cov_with(n: u64, config: &LabConfig) -> Result<(Vec<u64>, CovValue)> {
    if n % 3 != 0 || n == 0 {
        return Err(CvError::NotMultipleOfThree { n });
    }
    let rows = sweep_with(n, default_mode(n, config), config)?;
    Ok(argmin_by(&rows, |r| &r.cov_exact))
}

/// `min_k MSE(n, k) / (1/(4n))`.
pub fn gap_ratio(n: u64) -> Result<f64> {
    gap_ratio_with(n, &LabConfig::default())
}

pub fn gap_ratio_with(n: u64, config: &LabConfig) -> Result<f64> {
    let (_, best) = argmin_mse_with(n, config)?;
    Ok(match best {
        CovValue::Exact(v) => (v * ExactRational::from_integer(4 * n)).to_f64(),
        CovValue::Float(v) => v * 4.0 * n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub n: u64,
    /// False below the threshold, where the outcome is reported but not enforced.
    pub enforced: bool,
    /// Fold sizes `m <= n/3` dividing `n`, ascending.
    pub fold_sizes: Vec<u64>,
    /// First pair `(m1, m2)`, `m1 < m2`, with `Cov(n, m1) <= Cov(n, m2)`.
    pub first_violation: Option<(u64, u64)>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn passed(&self) -> bool {
        self.holds() || !self.enforced
    }
}

/// Strict decrease of `Cov(n, m)` over fold sizes `m <= n/3`, and
/// `Cov(n, n/3) < Cov(n, n/2)` when `6 | n`.
pub fn monotonicity_check(n: u64, threshold: u64) -> Result<MonotonicityReport> {
    monotonicity_check_with(n, threshold, &LabConfig::default())
}

pub fn monotonicity_check_with(n: u64, threshold: u64, config: &LabConfig) -> Result<MonotonicityReport> {
    let rows = sweep_with(n, default_mode(n, config), config)?;
    // Ascending m is descending k.
    let mut small: Vec<&SweepRow> = rows.iter().filter(|r| 3 * r.m <= n).collect();
    small.reverse();
    let mut first_violation = small
        .windows(2)
        .find(|w| compare(&w[0].cov_exact, &w[1].cov_exact) != Ordering::Greater)
        .map(|w| (w[0].m, w[1].m));
    if first_violation.is_none() && n % 6 == 0 {
        let third = rows.iter().find(|r| r.k == 3).expect("3 | n");
        let half = rows.iter().find(|r| r.k == 2).expect("2 | n");
        if compare(&third.cov_exact, &half.cov_exact) != Ordering::Less {
            first_violation = Some((third.m, half.m));
        }
    }
    Ok(MonotonicityReport {
        n,
        enforced: n >= threshold,
        fold_sizes: small.iter().map(|r| r.m).collect(),
        first_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxRow {
    pub n: u64,
    pub k_star: Vec<u64>,
    pub min_mse: CovValue,
    /// `min_mse * n`.
    pub scaled: f64,
    /// `min_mse * n / sqrt(k*)`, with the smallest minimizer.
    pub normalized: f64,
}

pub fn minimax_table(ns: &[u64]) -> Result<Vec<MinimaxRow>> {
    minimax_table_with(ns, &LabConfig::default())
}

pub fn minimax_table_with(ns: &[u64], config: &LabConfig) -> Result<Vec<MinimaxRow>> {
    ns.iter()
        .map(|&n| {
            let rows = sweep_with(n, default_mode(n, config), config)?;
            let (k_star, min_mse) = argmin_by(&rows, |r| &r.mse_exact);
            let scaled = min_mse.to_f64() * n as f64;
            let normalized = scaled / (k_star[0] as f64).sqrt();
            Ok(MinimaxRow {
                n,
                k_star,
                min_mse,
                scaled,
                normalized,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "n,k,m,cov_exact,mse_exact,cov_leading,rel_err_leading,mse_holdout";

fn csv_float(x: Option<f64>) -> String {
    x.map(|v| format_sig(v, 12)).unwrap_or_default()
}

/// Rationals as `num/den`, floats with 12 significant digits, missing values empty.
pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.k,
            r.m,
            r.cov_exact,
            r.mse_exact,
            csv_float(r.cov_leading),
            csv_float(r.rel_err_leading),
            r.mse_holdout
        )?;
    }
    Ok(())
}
