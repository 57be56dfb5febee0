//! Seeded Monte Carlo estimation of CV mean-squared error and stability.
//!
//! Every trial draws from its own generator: ChaCha8 seeded with
//! `seed_from_u64(seed)` and the stream set to the trial index. Trials can
//! then run in any order on any number of threads, and the per-trial values
//! are reduced with a fixed pairwise tree, so a `(config, seed)` pair always
//! reproduces the same estimate bit for bit.

mod algorithm;
pub mod config;
mod data;
mod stability;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use algorithm::{AlgorithmKind, AlgorithmSpec, Hypothesis, TiePolicy};
pub use data::{DataKind, DataSpec, Example};
pub use stability::{
    exact_hypothesis_stability, exact_majority_loss_stability, loss_stability_anticorr, majority_flip_probability,
};

use crate::error::{CvError, Result};
use crate::exact::FoldScheme;
use crate::summation::pairwise_sum;

/// Recorded in manifests next to every stochastic result.
pub const RNG_FAMILY: &str = "ChaCha8 (rand_chacha 0.9): seed_from_u64(seed), stream = trial index";

pub const MIN_TRIALS: u64 = 100;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SimEstimate {
    pub fn from_values(values: &[f64], seed: u64) -> Self {
        assert!(values.len() >= 2, "need at least two trials");
        let count = values.len() as f64;
        let mean = pairwise_sum(values) / count;
        let deviations: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let variance = pairwise_sum(&deviations) / (count - 1.0);
        SimEstimate {
            mean,
            std_error: (variance / count).sqrt(),
            trials: values.len() as u64,
            seed,
        }
    }

    /// `|mean - target| <= z * std_error`, treating a zero standard error as exact.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_error
    }
}

/// Generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Squared error and CV estimate from every trial of one CV experiment.
#[derive(Debug, Clone)]
pub struct CvRun {
    pub mse: SimEstimate,
    /// Monte Carlo mean of the CV estimate itself.
    pub cv_estimate: SimEstimate,
}

/// Monte Carlo estimate of `E[(L_cv - L(A(S^n)))^2]` with `n = data.n`.
pub fn run_cv_mse(data: &DataSpec, algo: &AlgorithmSpec, k: u64, trials: u64, seed: u64) -> Result<SimEstimate> {
    Ok(run_cv(data, algo, k, trials, seed)?.mse)
}

pub fn run_cv(data: &DataSpec, algo: &AlgorithmSpec, k: u64, trials: u64, seed: u64) -> Result<CvRun> {
    let scheme = FoldScheme::new(data.n, k)?;
    check_trials(trials)?;
    data.check_algorithm(algo)?;
    let outcomes: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map_init(Vec::new, |buf, index| {
            let mut rng = trial_rng(seed, index);
            data.sample(&mut rng, scheme.n() as usize, buf);
            cv_trial(&scheme, algo, data, buf)
        })
        .collect();
    let (squared, estimates): (Vec<f64>, Vec<f64>) = outcomes.into_iter().unzip();
    Ok(CvRun {
        mse: SimEstimate::from_values(&squared, seed),
        cv_estimate: SimEstimate::from_values(&estimates, seed),
    })
}

/// One CV evaluation: returns `((L_cv - L)^2, L_cv)`.
fn cv_trial(scheme: &FoldScheme, algo: &AlgorithmSpec, data: &DataSpec, sample: &[Example]) -> (f64, f64) {
    let n = scheme.n();
    let m = scheme.m() as usize;
    let fold_ones: Vec<u64> = sample
        .chunks(m)
        .map(|fold| fold.iter().map(|e| e.y as u64).sum())
        .collect();
    let total_ones: u64 = fold_ones.iter().sum();
    let mut errors = 0u64;
    for (fold, ones) in sample.chunks(m).zip(&fold_ones) {
        let h = algo.train(total_ones - ones, n - scheme.m(), n);
        errors += fold.iter().filter(|e| h.predict(e.x) != e.y).count() as u64;
    }
    // Equal folds: the mean of per-fold error rates is the pooled error rate.
    let cv = errors as f64 / n as f64;
    let risk = data.population_risk(&algo.train(total_ones, n, n));
    ((cv - risk) * (cv - risk), cv)
}

/// Monte Carlo estimate of `E|L(A(S^n)) - L(A(S^{n-m}))|` with `n = data.n`.
pub fn estimate_loss_stability(
    data: &DataSpec,
    algo: &AlgorithmSpec,
    m: u64,
    trials: u64,
    seed: u64,
) -> Result<SimEstimate> {
    let n = data.n;
    if m < 1 || m >= n {
        return Err(CvError::InvalidArgument(format!("need 1 <= m < n (n = {n}, m = {m})")));
    }
    check_trials(trials)?;
    data.check_algorithm(algo)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(Vec::new, |buf, index| {
            let mut rng = trial_rng(seed, index);
            data.sample(&mut rng, n as usize, buf);
            let reduced_ones: u64 = buf[..(n - m) as usize].iter().map(|e| e.y as u64).sum();
            let added_ones: u64 = buf[(n - m) as usize..].iter().map(|e| e.y as u64).sum();
            let full = algo.train(reduced_ones + added_ones, n, n);
            let reduced = algo.train(reduced_ones, n - m, n);
            (data.population_risk(&full) - data.population_risk(&reduced)).abs()
        })
        .collect();
    Ok(SimEstimate::from_values(&values, seed))
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(CvError::InvalidArgument(format!(
            "trials must be at least {MIN_TRIALS} (got {trials})"
        )));
    }
    Ok(())
}
