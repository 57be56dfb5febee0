use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::algorithm::{AlgorithmKind, AlgorithmSpec, Hypothesis};
use crate::error::{CvError, Result};

/// Data-generating distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DataKind {
    /// All mass on one feature point; label 1 with probability `q`.
    PointMassRandomLabel { q: f64 },
    /// Features uniform on `[0, 1]`, label `1{x > 1/2}`.
    UniformThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub kind: DataKind,
    pub n: u64,
}

/// One labelled example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example {
    pub x: f64,
    pub y: u8,
}

impl DataSpec {
    pub fn point_mass(q: f64, n: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(CvError::InvalidArgument(format!(
                "label probability q = {q} outside [0, 1]"
            )));
        }
        Ok(DataSpec {
            kind: DataKind::PointMassRandomLabel { q },
            n,
        })
    }

    pub fn uniform_threshold(n: u64) -> Self {
        DataSpec {
            kind: DataKind::UniformThreshold,
            n,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, len: usize, out: &mut Vec<Example>) {
        out.clear();
        match self.kind {
            DataKind::PointMassRandomLabel { q } => {
                out.extend((0..len).map(|_| Example {
                    x: 0.5,
                    y: u8::from(rng.random::<f64>() < q),
                }));
            }
            DataKind::UniformThreshold => {
                out.extend((0..len).map(|_| {
                    let x = rng.random::<f64>();
                    Example {
                        x,
                        y: u8::from(x > 0.5),
                    }
                }));
            }
        }
    }

    pub fn check_algorithm(&self, algo: &AlgorithmSpec) -> Result<()> {
        if matches!(algo.kind, AlgorithmKind::AnticorrInterval) && !matches!(self.kind, DataKind::UniformThreshold) {
            return Err(CvError::IncompatibleAlgorithm {
                algorithm: algo.to_string(),
                data: self.to_string(),
            });
        }
        Ok(())
    }

    /// Population 0-1 risk of `h`, in closed form.
    pub fn population_risk(&self, h: &Hypothesis) -> f64 {
        match (self.kind, *h) {
            (DataKind::PointMassRandomLabel { q }, Hypothesis::Constant(label)) => {
                if label == 0 {
                    q
                } else {
                    1.0 - q
                }
            }
            (DataKind::UniformThreshold, Hypothesis::Constant(_)) => 0.5,
            // The interval has length 1/2 and overlaps (1/2, 1] in length 1/2 - p/2.
            (DataKind::UniformThreshold, Hypothesis::Interval { p }) => p,
            (DataKind::PointMassRandomLabel { .. }, Hypothesis::Interval { .. }) => {
                panic!("interval hypotheses are only defined for the uniform-threshold distribution")
            }
        }
    }
}

impl fmt::Display for DataSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DataKind::PointMassRandomLabel { q } => write!(f, "point-mass(q={q}, n={})", self.n),
            DataKind::UniformThreshold => write!(f, "uniform-threshold(n={})", self.n),
        }
    }
}
