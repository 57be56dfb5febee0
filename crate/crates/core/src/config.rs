//! Tunable limits and empirically fitted constants.

use serde::{Deserialize, Serialize};

/// Limits and calibration shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    /// Largest `n` accepted by exact-rational covariance evaluation.
    pub exact_n_cap: u64,
    /// Largest `n` accepted by the 2^n label-vector enumeration.
    pub brute_force_cap: u64,
    /// Largest fold size accepted by the count-based oracle.
    pub count_oracle_m_cap: u64,
    /// Below this `n`, the monotonicity check reports instead of asserting.
    pub monotonicity_threshold: u64,
    /// Terms in the theta series.
    pub theta_terms: u32,
    /// Half-width, in standard deviations, of direct lattice-sum windows.
    pub lattice_window_sd: f64,
    /// The sublinear and large-m approximations apply for `m <= n / regime_divisor`.
    pub regime_divisor: u64,
    pub calibration: Calibration,
}

/// Constants whose existence is known but whose values are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `max_r r^{3/2} sup_t |p_r(t) - g_r(t)|` over `2 <= r <= 5000`
    /// (measured 0.199466, approached from below).
    pub llt_c0: f64,
    /// Large-m error budget constant: `|Cov - M| <= c / (sqrt(n) m^{3/2})`,
    /// fitted on `60 <= n <= 1200`, `2 <= m <= n/3` (measured max 0.08149 at n=60, m=20).
    pub large_m_c: f64,
    /// `|Cov(n, n/2) pi (n-2) - 1| <= c / n`; measured sup of `n |...|` is 2.9995.
    pub endpoint_half_c: f64,
    /// Bracket for `hypothesis_stability(n, m) * sqrt(n/m)`.
    pub stability_bracket: (f64, f64),
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            llt_c0: 0.1995,
            large_m_c: 0.082,
            endpoint_half_c: 3.0,
            stability_bracket: (0.25, 0.45),
        }
    }
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            exact_n_cap: 4096,
            brute_force_cap: 20,
            count_oracle_m_cap: 512,
            monotonicity_threshold: 60,
            theta_terms: 16,
            lattice_window_sd: 12.0,
            regime_divisor: 3,
            calibration: Calibration::default(),
        }
    }
}
