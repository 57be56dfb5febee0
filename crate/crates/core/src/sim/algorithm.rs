use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CvError;

/// How Majority resolves an exact tie `2 * ones == size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TiePolicy {
    /// Output the all-zero hypothesis on ties: `h0` iff `ones <= size / 2`.
    ToZero,
    /// Output the all-one hypothesis on ties: `h0` iff `ones < size / 2`.
    ToOne,
}

impl TiePolicy {
    /// Label predicted by Majority trained on `ones` positives out of `size`.
    #[inline]
    pub fn majority_label(self, ones: u64, size: u64) -> u8 {
        let predicts_zero = match self {
            TiePolicy::ToZero => 2 * ones <= size,
            TiePolicy::ToOne => 2 * ones < size,
        };
        u8::from(!predicts_zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmKind {
    /// Always predicts the given label.
    Constant(u8),
    Majority(TiePolicy),
    /// Outputs `1{1/2 - p/2 < x < 1 - p/2}` with `p` the label mean when
    /// trained on the full sample, and the zero hypothesis on any smaller one.
    AnticorrInterval,
}

/// A learning rule together with a free-text description for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub description: String,
}

impl AlgorithmSpec {
    pub fn constant(label: u8) -> Self {
        assert!(label <= 1, "labels are binary");
        AlgorithmSpec {
            kind: AlgorithmKind::Constant(label),
            description: format!("constant h{label}"),
        }
    }

    pub fn majority(tie: TiePolicy) -> Self {
        let tie_desc = match tie {
            TiePolicy::ToZero => "ties to h0",
            TiePolicy::ToOne => "ties to h1",
        };
        AlgorithmSpec {
            kind: AlgorithmKind::Majority(tie),
            description: format!("majority, {tie_desc}"),
        }
    }

    pub fn anticorr_interval() -> Self {
        AlgorithmSpec {
            kind: AlgorithmKind::AnticorrInterval,
            description: "interval rule on full sample, h0 otherwise".into(),
        }
    }

    /// True when the trained hypothesis depends on the sample only through
    /// its label count and its size, and is a constant classifier.
    pub fn is_label_count_constant(&self) -> bool {
        !matches!(self.kind, AlgorithmKind::AnticorrInterval)
    }

    /// Trains on a sample with `ones` positive labels out of `size`;
    /// `full_size` is the size of the complete data set.
    pub fn train(&self, ones: u64, size: u64, full_size: u64) -> Hypothesis {
        match self.kind {
            AlgorithmKind::Constant(label) => Hypothesis::Constant(label),
            AlgorithmKind::Majority(tie) => Hypothesis::Constant(tie.majority_label(ones, size)),
            AlgorithmKind::AnticorrInterval => {
                if size == full_size {
                    Hypothesis::Interval {
                        p: ones as f64 / size as f64,
                    }
                } else {
                    Hypothesis::Constant(0)
                }
            }
        }
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AlgorithmKind::Constant(label) => write!(f, "constant{label}"),
            AlgorithmKind::Majority(TiePolicy::ToZero) => f.write_str("majority"),
            AlgorithmKind::Majority(TiePolicy::ToOne) => f.write_str("majority-ties-one"),
            AlgorithmKind::AnticorrInterval => f.write_str("anticorr"),
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self, CvError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" | "constant0" | "const0" => Ok(Self::constant(0)),
            "constant1" | "const1" => Ok(Self::constant(1)),
            "majority" | "majority-ties-zero" => Ok(Self::majority(TiePolicy::ToZero)),
            "majority-ties-one" => Ok(Self::majority(TiePolicy::ToOne)),
            "anticorr" | "anticorr-interval" => Ok(Self::anticorr_interval()),
            other => Err(CvError::Parse(format!(
                "unknown algorithm {other:?} (expected constant0|constant1|majority|majority-ties-one|anticorr)"
            ))),
        }
    }
}

/// A trained classifier on the feature space `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hypothesis {
    Constant(u8),
    /// Indicator of the open interval `(1/2 - p/2, 1 - p/2)`.
    Interval {
        p: f64,
    },
}

impl Hypothesis {
    #[inline]
    pub fn predict(&self, x: f64) -> u8 {
        match *self {
            Hypothesis::Constant(label) => label,
            Hypothesis::Interval { p } => u8::from(0.5 - 0.5 * p < x && x < 1.0 - 0.5 * p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_follows_tie_policy() {
        // h0 iff Y <= n/2.
        assert_eq!(TiePolicy::ToZero.majority_label(1, 2), 0);
        assert_eq!(TiePolicy::ToOne.majority_label(1, 2), 1);
        assert_eq!(TiePolicy::ToZero.majority_label(2, 3), 1);
        assert_eq!(TiePolicy::ToOne.majority_label(1, 3), 0);
        assert_eq!(TiePolicy::ToZero.majority_label(0, 0), 0);
    }

    #[test]
    fn anticorr_switches_on_sample_size() {
        let a = AlgorithmSpec::anticorr_interval();
        assert_eq!(a.train(3, 4, 8), Hypothesis::Constant(0));
        assert_eq!(a.train(3, 8, 8), Hypothesis::Interval { p: 0.375 });
        let h = Hypothesis::Interval { p: 0.5 };
        assert_eq!(h.predict(0.3), 1);
        assert_eq!(h.predict(0.2), 0);
        assert_eq!(h.predict(0.8), 0);
    }

    #[test]
    fn parse_round_trip() {
        for name in ["constant0", "constant1", "majority", "majority-ties-one", "anticorr"] {
            let spec: AlgorithmSpec = name.parse().unwrap();
            assert_eq!(spec.to_string(), name);
        }
        assert!("knn".parse::<AlgorithmSpec>().is_err());
    }
}
