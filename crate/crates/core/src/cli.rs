//! The `specfield` command line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 internal consistency error,
//! 64 unknown or missing subcommand.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::blocking::{self, MixingProfile};
use crate::error::{Error, Result};
use crate::fieldgen::LinearFieldSpec;
use crate::frequencies::SchemeConfig;
use crate::kernels;
use crate::mixing;
use crate::periodogram::{self, BoxDims, Frequency};
use crate::spectral;
use crate::stats::{self, WeightVector};

pub const EXIT_USAGE: i32 = 64;

/// Everything an experiment subcommand reads from its JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: LinearFieldSpec,
    #[serde(default)]
    pub dims: Option<BoxDims>,
    #[serde(default)]
    pub dims_sequence: Option<Vec<BoxDims>>,
    pub scheme: SchemeConfig,
    #[serde(rename = "R", alias = "replications")]
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub weights: Option<WeightVector>,
    #[serde(default)]
    pub out: Option<OutputPaths>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        Error::check_dim(self.spec.dim(), self.scheme.base.dim())?;
        if self.replications < 2 {
            return Err(Error::invalid(format!("R must be at least 2, got {}", self.replications)));
        }
        if let Some(q) = self.q {
            if !(q > 0.0 && q < 0.25) {
                return Err(Error::invalid(format!("q must satisfy 0 < q < 1/4, got {q}")));
            }
        }
        if let Some(w) = &self.weights {
            if w.m() != self.scheme.m {
                return Err(Error::invalid(format!("weights have {} pairs, scheme has m = {}", w.m(), self.scheme.m)));
            }
        }
        for dims in self.dims.iter().chain(self.dims_sequence.iter().flatten()) {
            Error::check_dim(self.spec.dim(), dims.dim())?;
        }
        if let Some(seq) = &self.dims_sequence {
            if seq.is_empty() {
                return Err(Error::invalid("dims_sequence is empty"));
            }
            // the smallest side has to grow along the sequence
            if let Some(w) = seq.windows(2).find(|w| w[1].min_side() <= w[0].min_side()) {
                return Err(Error::invalid(format!(
                    "dims_sequence must have strictly growing smallest side; {} is followed by {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn single_dims(&self) -> Result<BoxDims> {
        match (&self.dims, &self.dims_sequence) {
            (Some(d), _) => Ok(d.clone()),
            (None, Some(seq)) if seq.len() == 1 => Ok(seq[0].clone()),
            _ => Err(Error::invalid("config needs \"dims\"")),
        }
    }

    pub fn sequence(&self) -> Result<Vec<BoxDims>> {
        match (&self.dims_sequence, &self.dims) {
            (Some(seq), _) => Ok(seq.clone()),
            (None, Some(d)) => Ok(vec![d.clone()]),
            _ => Err(Error::invalid("config needs \"dims_sequence\"")),
        }
    }

    pub fn weights_or_ones(&self) -> Result<WeightVector> {
        match &self.weights {
            Some(w) => Ok(w.clone()),
            None => WeightVector::ones(self.scheme.m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "specfield", version = version_string(), about = "Periodograms of stationary random fields on Z^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn version_string() -> &'static str {
    if cfg!(debug_assertions) {
        concat!(env!("CARGO_PKG_VERSION"), " (debug build)")
    } else {
        concat!(env!("CARGO_PKG_VERSION"), " (release build)")
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fejér and modulated Dirichlet kernels at one point
    Kernels {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        n: u64,
    },
    /// Generate a field and evaluate its periodogram at one frequency
    Periodogram {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        dims: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<String>,
    },
    /// Expected periodogram, or a uniform-convergence table with --sequence
    Expectation {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, conflicts_with = "sequence")]
        dims: Option<String>,
        #[arg(long, allow_hyphen_values = true, requires = "dims")]
        lambda: Option<String>,
        /// Also evaluate the Fejér-smoothed integral on a tensor grid
        #[arg(long)]
        quadrature: bool,
        /// Comma-separated boxes such as 8,16,32 or 8x8,16x16
        #[arg(long)]
        sequence: Option<String>,
        /// Grid points per axis (frequency grid with --sequence, quadrature grid otherwise)
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// E[S^λ conj(S^μ)]/V and E[S^λ S^μ]/V
    Covariance {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        dims: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
    },
    /// Monte Carlo check of the joint normal limit and exponential periodograms
    CltExperiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-replication sums and periodograms
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo E[G]^2 against its limit along a box sequence
    Miller {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bernstein blocking plan for a first side and a mixing profile
    BlockingPlan {
        #[arg(long)]
        v1: u64,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        q: f64,
        /// Full box, for cardinalities; defaults to the single side v1
        #[arg(long)]
        dims: Option<String>,
    },
    /// Leftover and truncation-tail moments along a box sequence
    Negligibility {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonical-correlation lower bounds on the mixing profile
    MixingEstimate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        window: u64,
        #[arg(long)]
        set_size: usize,
        #[arg(long)]
        n_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::invalid(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = read_json(path)?;
    config.validate()?;
    Ok(config)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::invalid(format!("cannot parse {what} entry {s:?}"))))
        .collect()
}

/// `32x32` or `32,32`.
fn parse_dims(text: &str) -> Result<BoxDims> {
    let sides = text
        .split(['x', ','])
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::invalid(format!("cannot parse box {text:?}"))))
        .collect::<Result<_>>()?;
    BoxDims::new(sides)
}

fn parse_frequency(text: &str) -> Result<Frequency> {
    Frequency::new(parse_list(text, "frequency")?)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Consistency(format!("serializing report: {e}")))
}

/// Writes to `path` when given, otherwise to `out`.
fn emit(text: &str, path: Option<&Path>, out: &mut Vec<u8>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::invalid(format!("{}: {e}", p.display()))),
        None => {
            out.extend_from_slice(text.as_bytes());
            Ok(())
        }
    }
}

fn report_path<'a>(flag: &'a Option<PathBuf>, config: &'a ExperimentConfig) -> Option<&'a Path> {
    flag.as_deref().or_else(|| config.out.as_ref().and_then(|o| o.report.as_deref()))
}

fn dispatch(command: Command, out: &mut Vec<u8>) -> Result<()> {
    match command {
        Command::Kernels { alpha, n } => {
            let arg = kernels::KernelArg::new(alpha, n)?;
            let d = arg.dirichlet_mod();
            emit(
                &to_json(&json!({
                    "alpha": alpha,
                    "n": n,
                    "fejer": arg.fejer(),
                    "dirichlet": {"re": d.re, "im": d.im},
                    "dirichlet_abs_sq": d.norm_sqr(),
                }))?,
                None,
                out,
            )
        }
        Command::Periodogram { spec, dims, lambda, seed, shift } => {
            let spec: LinearFieldSpec = read_json(&spec)?;
            let dims = parse_dims(&dims)?;
            let lambda = parse_frequency(&lambda)?;
            let shift = match shift {
                Some(s) => parse_list(&s, "shift")?,
                None => vec![0; dims.dim()],
            };
            let sample = spec.generate(&dims, &shift, seed)?;
            let s = periodogram::modulated_sum(&sample, &lambda)?;
            emit(
                &to_json(&json!({
                    "dims": dims,
                    "lambda": lambda,
                    "seed": seed,
                    "sum": {"re": s.re, "im": s.im},
                    "periodogram": s.norm_sqr() / dims.volume() as f64,
                    "spectral_density": spec.spectral_density(&lambda)?,
                }))?,
                None,
                out,
            )
        }
        Command::Expectation { spec, dims, lambda, quadrature, sequence, grid, out: path } => {
            let spec: LinearFieldSpec = read_json(&spec)?;
            if let Some(seq) = sequence {
                let seq: Vec<BoxDims> = seq.split(',').map(parse_dims).collect::<Result<_>>()?;
                let report = spectral::uniform_convergence_report(&spec, &seq, grid.unwrap_or(128))?;
                return emit(&report.to_csv(), path.as_deref(), out);
            }
            let (Some(dims), Some(lambda)) = (dims, lambda) else {
                return Err(Error::invalid("expectation needs --dims and --lambda, or --sequence"));
            };
            let dims = parse_dims(&dims)?;
            let lambda = parse_frequency(&lambda)?;
            let exact = spectral::expected_periodogram_exact(&spec, &lambda, &dims)?;
            let mut report = json!({
                "dims": dims,
                "lambda": lambda,
                "exact": exact,
                "spectral_density": spec.spectral_density(&lambda)?,
            });
            if quadrature {
                let g = grid.unwrap_or(4 * dims.sides().iter().max().copied().unwrap_or(1));
                let value = spectral::expected_periodogram_quadrature(&spec, &lambda, &dims, g)?;
                report["quadrature"] = json!(value);
                report["quadrature_grid"] = json!(g);
            }
            emit(&to_json(&report)?, path.as_deref(), out)
        }
        Command::Covariance { spec, dims, lambda, mu } => {
            let spec: LinearFieldSpec = read_json(&spec)?;
            let dims = parse_dims(&dims)?;
            let lambda = parse_frequency(&lambda)?;
            let mu = parse_frequency(&mu)?;
            let c = spectral::covariance_of_sums(&spec, &lambda, &mu, &dims)?;
            let p = spectral::product_of_sums(&spec, &lambda, &mu, &dims)?;
            emit(
                &to_json(&json!({
                    "dims": dims,
                    "lambda": lambda,
                    "mu": mu,
                    "covariance": {"re": c.re, "im": c.im},
                    "product": {"re": p.re, "im": p.im},
                }))?,
                None,
                out,
            )
        }
        Command::CltExperiment { config, out: path, csv } => {
            let config = read_config(&config)?;
            let run = stats::run_clt_experiment(
                &config.spec,
                &config.scheme,
                &config.single_dims()?,
                config.replications,
                config.seed,
            )?;
            let csv = csv.or_else(|| config.out.as_ref().and_then(|o| o.csv.clone()));
            if let Some(csv) = csv {
                let file = fs::File::create(&csv).map_err(|e| Error::invalid(format!("{}: {e}", csv.display())))?;
                run.write_csv(std::io::BufWriter::new(file))?;
            }
            emit(&to_json(&run.report)?, report_path(&path, &config), out)
        }
        Command::Miller { config, out: path } => {
            let config = read_config(&config)?;
            let report = stats::miller_check(
                &config.spec,
                &config.scheme,
                &config.weights_or_ones()?,
                &config.sequence()?,
                config.replications,
                config.seed,
            )?;
            emit(&to_json(&report)?, report_path(&path, &config), out)
        }
        Command::BlockingPlan { v1, profile, q, dims } => {
            let profile: MixingProfile = read_json(&profile)?;
            let plan = blocking::plan(v1, &profile, q)?;
            let dims = match dims {
                Some(d) => parse_dims(&d)?,
                None => BoxDims::new(vec![v1 as usize])?,
            };
            let sets = blocking::block_index_sets(&plan, &dims)?;
            emit(
                &to_json(&json!({
                    "plan": plan,
                    "dims": dims,
                    "block_cardinality": sets.block_cardinality(0),
                    "leftover_cardinality": sets.leftover_cardinality(),
                    "blocks": sets.blocks,
                    "leftover": sets.leftover,
                }))?,
                None,
                out,
            )
        }
        Command::Negligibility { config, out: path } => {
            let config = read_config(&config)?;
            let q = config.q.ok_or_else(|| Error::invalid("negligibility config needs \"q\""))?;
            let report = blocking::negligibility_report(
                &config.spec,
                &config.scheme,
                &config.sequence()?,
                q,
                &config.weights_or_ones()?,
                config.replications,
                config.seed,
            )?;
            emit(&to_json(&report)?, report_path(&path, &config), out)
        }
        Command::MixingEstimate { spec, window, set_size, n_max, out: path } => {
            let spec: LinearFieldSpec = read_json(&spec)?;
            let estimate = mixing::rho_prime_profile(&spec, window, set_size, n_max)?;
            emit(&to_json(&estimate)?, path.as_deref(), out)
        }
    }
}

fn thread_pool(threads: Option<String>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(value) = threads {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::invalid(format!("SPECFIELD_THREADS must be a positive integer, got {value:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Consistency(format!("thread pool: {e}")))
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return 0;
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => 1,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let mut buffer = Vec::new();
    let result = thread_pool(std::env::var("SPECFIELD_THREADS").ok()).and_then(|pool| pool.install(|| dispatch(cli.command, &mut buffer)));
    if out.write_all(&buffer).and_then(|_| out.flush()).is_err() {
        return 1;
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
#[path = "cli_tests.rs"]
mod tests;
