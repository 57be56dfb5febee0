mod manifest;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvlab::analysis::{sweep_with, write_sweep_csv};
use cvlab::asymptotics::CovarianceReport;
use cvlab::exact::{cv_mse, exact_fold_covariance_with};
use cvlab::sim::config::{append_result_csv, csv_row, SimConfig, CSV_HEADER};
use cvlab::sim::{run_cv_mse, RNG_FAMILY};
use cvlab::verify::{run_suite, Suite};
use cvlab::{CovValue, CovarianceQuery, CvError, ExactRational, FoldScheme, LabConfig, PrecisionMode};

use manifest::{params_hash, RunManifest};

#[derive(Parser)]
#[command(
    name = "cvlab",
    version,
    about = "Exact and simulated MSE of k-fold cross-validation for the Majority rule"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fold covariance, CV MSE and the hold-out baseline for one (n, k).
    Exact {
        #[arg(long)]
        n: u64,
        /// Number of folds; give this or --m.
        #[arg(long, conflicts_with = "m")]
        k: Option<u64>,
        /// Fold size n/k.
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, default_value = "rational")]
        mode: PrecisionMode,
        /// Write the values as JSON, with a manifest sidecar.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One CSV row per divisor k >= 2 of n.
    Sweep {
        #[arg(long)]
        n: u64,
        /// Defaults to rational up to the exact cap and log beyond.
        #[arg(long)]
        mode: Option<PrecisionMode>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo CV MSE for a flat key = value config file.
    Simulate {
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Results CSV to append to; the row is printed to stdout regardless.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs an acceptance suite and prints one line per criterion.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Write outcomes as JSON, with a manifest sidecar.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact covariance next to its leading, sublinear and theta-corrected approximations.
    Asymptotic {
        #[arg(long)]
        n: u64,
        #[arg(long, conflicts_with = "k")]
        m: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure modes mapped to exit codes: invalid input is 2, a failing suite is 1.
enum Failure {
    Invalid(String),
    Verification,
}

impl From<CvError> for Failure {
    fn from(e: CvError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let config = LabConfig::default();
    match run(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Invalid(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("CVLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("CVLAB_THREADS must be a positive integer (got {value:?})"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command, config: &LabConfig) -> Result<(), Failure> {
    match command {
        Command::Exact { n, k, m, mode, out } => cmd_exact(n, k, m, mode, out.as_deref(), config),
        Command::Sweep { n, mode, out } => cmd_sweep(n, mode, out.as_deref(), config),
        Command::Simulate {
            config: path,
            seed,
            trials,
            out,
        } => cmd_simulate(&path, seed, trials, out.as_deref()),
        Command::Verify { suite, out } => cmd_verify(suite, out.as_deref(), config),
        Command::Asymptotic { n, m, k, out } => cmd_asymptotic(n, m, k, out.as_deref(), config),
    }
}

fn scheme_from(n: u64, k: Option<u64>, m: Option<u64>) -> Result<FoldScheme, Failure> {
    match (k, m) {
        (Some(k), None) => Ok(FoldScheme::new(n, k)?),
        (None, Some(m)) => Ok(FoldScheme::from_fold_size(n, m)?),
        _ => Err(Failure::Invalid("give exactly one of --k or --m".into())),
    }
}

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn write_output(path: &Path, body: &str, manifest: &RunManifest) -> Result<(), Failure> {
    std::fs::write(path, body)?;
    manifest.write_beside(path)?;
    Ok(())
}

fn cmd_exact(
    n: u64,
    k: Option<u64>,
    m: Option<u64>,
    mode: PrecisionMode,
    out: Option<&Path>,
    config: &LabConfig,
) -> Result<(), Failure> {
    let scheme = scheme_from(n, k, m)?;
    let cov = exact_fold_covariance_with(&CovarianceQuery::for_scheme(&scheme, mode)?, config)?;
    let mse = cv_mse(&scheme, mode, config)?;
    let holdout = ExactRational::one() / ExactRational::from_integer(4 * n);
    let text = format!(
        "n={} k={} m={} mode={mode}\ncov={cov}\nmse={mse}\nholdout={}\n",
        scheme.n(),
        scheme.k(),
        scheme.m(),
        match mode {
            PrecisionMode::ExactRational => CovValue::Exact(holdout.clone()).to_string(),
            PrecisionMode::LogSpaceFloat => CovValue::Float(holdout.to_f64()).to_string(),
        }
    );
    print!("{text}");
    if let Some(path) = out {
        let p = params(&[
            ("n", n.to_string()),
            ("k", scheme.k().to_string()),
            ("mode", mode.to_string()),
        ]);
        let manifest = RunManifest::new("exact", p.clone(), params_hash(&p, config));
        let body = serde_json::json!({
            "n": scheme.n(), "k": scheme.k(), "m": scheme.m(), "mode": mode.to_string(),
            "cov": cov, "mse": mse, "holdout": holdout,
        });
        write_output(
            path,
            &(serde_json::to_string_pretty(&body).expect("serializes") + "\n"),
            &manifest,
        )?;
    }
    Ok(())
}

fn cmd_sweep(n: u64, mode: Option<PrecisionMode>, out: Option<&Path>, config: &LabConfig) -> Result<(), Failure> {
    let mode = mode.unwrap_or_else(|| cvlab::analysis::default_mode(n, config));
    let rows = sweep_with(n, mode, config)?;
    match out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_sweep_csv(&mut file, &rows)?;
            file.flush()?;
            let p = params(&[("n", n.to_string()), ("mode", mode.to_string())]);
            RunManifest::new("sweep", p.clone(), params_hash(&p, config)).write_beside(path)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_sweep_csv(&mut io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn cmd_simulate(path: &Path, seed: Option<u64>, trials: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    let mut sim = SimConfig::load(path)?;
    if let Some(seed) = seed {
        sim.seed = seed;
    }
    if let Some(trials) = trials {
        sim.trials = trials;
    }
    let estimate = run_cv_mse(&sim.data_spec()?, &sim.algo, sim.k, sim.trials, sim.seed)?;
    let hash = sim.hash();
    println!("{CSV_HEADER}");
    println!("{}", csv_row(&hash, &estimate));
    if let Some(out) = out {
        append_result_csv(out, &hash, &estimate)?;
        let p = params(&[
            ("config", path.display().to_string()),
            ("n", sim.n.to_string()),
            ("k", sim.k.to_string()),
            ("algo", sim.algo.to_string()),
            ("q", format!("{:?}", sim.q)),
            ("trials", sim.trials.to_string()),
        ]);
        RunManifest::new("simulate", p, hash)
            .with_seed(sim.seed, RNG_FAMILY)
            .write_beside(out)?;
    }
    Ok(())
}

fn cmd_verify(suite: Suite, out: Option<&Path>, config: &LabConfig) -> Result<(), Failure> {
    let outcomes = run_suite(suite, config);
    for outcome in &outcomes {
        println!("{outcome}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("suite {suite}: {} passed, {failed} failed", outcomes.len() - failed);
    if let Some(path) = out {
        let p = params(&[("suite", suite.to_string())]);
        let manifest = RunManifest::new("verify", p.clone(), params_hash(&p, config));
        write_output(
            path,
            &(serde_json::to_string_pretty(&outcomes).expect("serializes") + "\n"),
            &manifest,
        )?;
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_asymptotic(
    n: u64,
    m: Option<u64>,
    k: Option<u64>,
    out: Option<&Path>,
    config: &LabConfig,
) -> Result<(), Failure> {
    let scheme = scheme_from(n, k, m)?;
    let report = CovarianceReport::compute(scheme.n(), scheme.m(), config)?;
    let show = |v: Option<f64>| {
        v.map(|x| cvlab::exact::format_sig(x, 12))
            .unwrap_or_else(|| "n/a".into())
    };
    println!("n={} m={} k={}", report.n, report.m, scheme.k());
    println!("exact={}", cvlab::exact::format_sig(report.exact, 12));
    println!(
        "leading={} rel_err={}",
        show(report.leading),
        show(report.rel_err_leading)
    );
    println!(
        "sublinear={} rel_err={}",
        show(report.sublinear),
        show(report.rel_err_sublinear)
    );
    println!("theta_corrected={}", show(report.theta_corrected));
    if let Some(path) = out {
        let p = params(&[("n", n.to_string()), ("m", scheme.m().to_string())]);
        let manifest = RunManifest::new("asymptotic", p.clone(), params_hash(&p, config));
        write_output(
            path,
            &(serde_json::to_string_pretty(&report).expect("serializes") + "\n"),
            &manifest,
        )?;
    }
    Ok(())
}
