//! Binomial coefficients: exact big-integer values and log-scale evaluation.
//!
//! The log path has two regimes. Up to a configurable cap, `ln r!` comes from
//! a table built by compensated summation of `ln i`. Beyond the cap,
//! `ln C(r, t)` uses the entropy form `t ln(r/t) - (r-t) ln(1 - t/r)` plus
//! Stirling remainders, and the fair-coin mass `ln(2^-r C(r, t))` uses the
//! saddle-point form with the deviance term, so no two large logarithms are
//! ever subtracted.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::summation::CompensatedSum;

/// Default size of the shared log-factorial table.
pub const DEFAULT_LOG_FACTORIAL_CAP: usize = 256;

// ln 2 split so that `r * LN2_HI` is exact for r < 2^32.
#[allow(clippy::excessive_precision)]
const LN2_HI: f64 = 6.931_471_803_691_238_164_9e-1;
#[allow(clippy::excessive_precision)]
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// Exact `C(r, t)`; zero when `t < 0` or `t > r`.
pub fn binomial(r: u64, t: i64) -> BigUint {
    if t < 0 || t as u64 > r {
        return BigUint::zero();
    }
    let t = (t as u64).min(r - t as u64);
    let mut acc = BigUint::one();
    for i in 0..t {
        acc *= r - i;
        acc /= i + 1;
    }
    acc
}

/// The full row `C(r, 0), ..., C(r, r)`.
pub fn binomial_row(r: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(r as usize + 1);
    let mut current = BigUint::one();
    row.push(current.clone());
    for t in 0..r {
        current = current * (r - t) / (t + 1);
        row.push(current.clone());
    }
    row
}

/// `r * ln 2` with about one rounding error in total.
#[inline]
pub(crate) fn ln2_multiple(r: f64) -> f64 {
    r * LN2_HI + r * LN2_LO
}

/// Table of `ln i!` for `i <= cap`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(cap: usize) -> Self {
        let mut table = Vec::with_capacity(cap + 1);
        let mut acc = CompensatedSum::new();
        table.push(0.0);
        for i in 1..=cap {
            acc.add((i as f64).ln());
            table.push(acc.value());
        }
        LogFactorials { table }
    }

    /// Process-wide table with [`DEFAULT_LOG_FACTORIAL_CAP`], built on first use.
    pub fn shared() -> &'static LogFactorials {
        static SHARED: OnceLock<LogFactorials> = OnceLock::new();
        SHARED.get_or_init(|| LogFactorials::new(DEFAULT_LOG_FACTORIAL_CAP))
    }

    pub fn cap(&self) -> u64 {
        (self.table.len() - 1) as u64
    }

    /// `ln r!`, from the table when possible and Stirling's series otherwise.
    pub fn ln_factorial(&self, r: u64) -> f64 {
        match self.table.get(r as usize) {
            Some(&v) => v,
            None => {
                let x = r as f64;
                x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + stirling_remainder_series(x)
            }
        }
    }

    /// `ln C(r, t)`; `-inf` outside `0..=r`.
    pub fn ln_binomial(&self, r: u64, t: i64) -> f64 {
        if t < 0 || t as u64 > r {
            return f64::NEG_INFINITY;
        }
        let t = t as u64;
        if r <= self.cap() {
            return self.table[r as usize] - self.table[t as usize] - self.table[(r - t) as usize];
        }
        let t = t.min(r - t);
        if t == 0 {
            return 0.0;
        }
        // r ln r - t ln t - (r-t) ln(r-t), written as a sum of positive parts.
        let (r_f, t_f, s_f) = (r as f64, t as f64, (r - t) as f64);
        let entropy = t_f * (r_f / t_f).ln() - s_f * (-t_f / r_f).ln_1p();
        entropy + self.stirling_remainder(r)
            - self.stirling_remainder(t)
            - self.stirling_remainder(r - t)
            - 0.5 * (2.0 * PI * t_f * s_f / r_f).ln()
    }

    /// `ln(2^-r C(r, t))`, the log mass of Bin(r, 1/2) at `t`.
    pub fn ln_half_binomial_pmf(&self, r: u64, t: i64) -> f64 {
        if t < 0 || t as u64 > r {
            return f64::NEG_INFINITY;
        }
        let t = t as u64;
        if t == 0 || t == r {
            return -ln2_multiple(r as f64);
        }
        let (r_f, t_f, s_f) = (r as f64, t as f64, (r - t) as f64);
        let half = 0.5 * r_f;
        let lc = self.stirling_remainder(r)
            - self.stirling_remainder(t)
            - self.stirling_remainder(r - t)
            - deviance(t_f, half)
            - deviance(s_f, half);
        lc - 0.5 * (2.0 * PI * t_f * s_f / r_f).ln()
    }

    /// `ln r! - (r ln r - r + ln sqrt(2 pi r))` for `r >= 1`.
    fn stirling_remainder(&self, r: u64) -> f64 {
        debug_assert!(r >= 1);
        if r <= 15 {
            let x = r as f64;
            self.table_or_series(r) - (x * x.ln() - x + 0.5 * (2.0 * PI * x).ln())
        } else {
            stirling_remainder_series(r as f64)
        }
    }

    fn table_or_series(&self, r: u64) -> f64 {
        match self.table.get(r as usize) {
            Some(&v) => v,
            // Only reached with a cap below 15; fall back to direct summation.
            None => (1..=r).map(|i| (i as f64).ln()).collect::<CompensatedSum>().value(),
        }
    }
}

/// Asymptotic series for the Stirling remainder, accurate to double precision
/// for `x > 15`.
fn stirling_remainder_series(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let xx = x * x;
    if x > 500.0 {
        (S0 - S1 / xx) / x
    } else if x > 80.0 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if x > 35.0 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// `x ln(x / np) + np - x`, evaluated without cancellation near `x = np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln C(r, t)` using the shared table; `-inf` outside `0..=r`.
pub fn log_binomial(r: u64, t: i64) -> f64 {
    LogFactorials::shared().ln_binomial(r, t)
}

/// `ln(2^-r C(r, t))` using the shared table.
pub fn ln_half_binomial_pmf(r: u64, t: i64) -> f64 {
    LogFactorials::shared().ln_half_binomial_pmf(r, t)
}
