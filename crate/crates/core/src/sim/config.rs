//! Flat `key = value` simulation configs and the append-only result CSV.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AlgorithmKind, AlgorithmSpec, DataSpec, SimEstimate};
use crate::error::{CvError, Result};

pub const CSV_HEADER: &str = "config_hash,mean,std_error,trials,seed";

/// Distribution family named in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFamily {
    PointMass,
    UniformThreshold,
}

/// One simulation experiment.
///
/// ```text
/// # comments and blank lines are ignored
/// n = 12
/// k = 3
/// algo = majority
/// q = 0.5
/// trials = 100000
/// seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: u64,
    pub k: u64,
    pub algo: AlgorithmSpec,
    pub data: DataFamily,
    pub q: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let (mut n, mut k, mut algo, mut data, mut q, mut trials, mut seed) =
            (None, None, None, None, None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CvError::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| CvError::Parse(format!("line {}: invalid {what} {value:?}", lineno + 1));
            match key {
                "n" => n = Some(value.parse::<u64>().map_err(|_| bad("n"))?),
                "k" => k = Some(value.parse::<u64>().map_err(|_| bad("k"))?),
                "algo" => algo = Some(value.parse::<AlgorithmSpec>()?),
                "q" => q = Some(value.parse::<f64>().map_err(|_| bad("q"))?),
                "trials" => trials = Some(value.parse::<u64>().map_err(|_| bad("trials"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                "data" => {
                    data = Some(match value {
                        "point-mass" => DataFamily::PointMass,
                        "uniform-threshold" => DataFamily::UniformThreshold,
                        _ => return Err(bad("data (expected point-mass|uniform-threshold)")),
                    })
                }
                other => return Err(CvError::Parse(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        let missing = |key: &str| CvError::Parse(format!("missing required key {key:?}"));
        let algo = algo.ok_or_else(|| missing("algo"))?;
        let data = data.unwrap_or(if matches!(algo.kind, AlgorithmKind::AnticorrInterval) {
            DataFamily::UniformThreshold
        } else {
            DataFamily::PointMass
        });
        Ok(SimConfig {
            n: n.ok_or_else(|| missing("n"))?,
            k: k.ok_or_else(|| missing("k"))?,
            algo,
            data,
            q: q.unwrap_or(0.5),
            trials: trials.ok_or_else(|| missing("trials"))?,
            seed: seed.unwrap_or(0),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CvError::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn data_spec(&self) -> Result<DataSpec> {
        match self.data {
            DataFamily::PointMass => DataSpec::point_mass(self.q, self.n),
            DataFamily::UniformThreshold => Ok(DataSpec::uniform_threshold(self.n)),
        }
    }

    /// Canonical text form, keys sorted, seed excluded.
    pub fn canonical(&self) -> String {
        let data = match self.data {
            DataFamily::PointMass => "point-mass",
            DataFamily::UniformThreshold => "uniform-threshold",
        };
        let mut out = String::new();
        let _ = writeln!(out, "algo={}", self.algo);
        let _ = writeln!(out, "data={data}");
        let _ = writeln!(out, "k={}", self.k);
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "q={:?}", self.q);
        let _ = writeln!(out, "trials={}", self.trials);
        out
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// CSV row for one estimate; floats use shortest round-trip formatting.
pub fn csv_row(config_hash: &str, est: &SimEstimate) -> String {
    format!(
        "{config_hash},{:?},{:?},{},{}",
        est.mean, est.std_error, est.trials, est.seed
    )
}

/// Appends a row, writing the header first when the file is new or empty.
pub fn append_result_csv(path: &Path, config_hash: &str, est: &SimEstimate) -> Result<()> {
    let io_err = |e: std::io::Error| CvError::InvalidArgument(format!("cannot write {}: {e}", path.display()));
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err)?;
    if file.metadata().map_err(io_err)?.len() == 0 {
        writeln!(file, "{CSV_HEADER}").map_err(io_err)?;
    }
    writeln!(file, "{}", csv_row(config_hash, est)).map_err(io_err)
}
