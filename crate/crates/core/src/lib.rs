//! Exact, asymptotic and Monte Carlo evaluation of the mean-squared error of
//! k-fold cross-validation, centred on the Majority rule under random labels.

pub mod analysis;
pub mod asymptotics;
pub mod binomial;
pub mod config;
pub mod error;
pub mod exact;
pub mod oracle;
pub mod rational;
pub mod sim;
pub mod summation;
pub mod verify;

pub use config::{Calibration, LabConfig};
pub use error::{CvError, Result};
pub use exact::{CovValue, CovarianceQuery, FoldScheme, PrecisionMode};
pub use oracle::OracleResult;
pub use rational::{ratio, ExactRational};
pub use sim::{AlgorithmSpec, DataSpec, SimEstimate, TiePolicy};
pub use verify::Suite;
