//! Monte Carlo harness for the periodogram limit theorems.
//!
//! For separated frequencies the vector `(Re S_j, Im S_j)_j / √V` should be
//! approximately normal with covariance `(f(λ)/2) I_{2m}`, and the
//! periodograms `I_j` approximately independent exponentials with mean `f(λ)`.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::fieldgen::LinearFieldSpec;
use crate::frequencies::{check_separation, SchemeConfig};
use crate::periodogram::{periodogram_vector, BoxDims, Frequency};
use crate::rng::replication_seed;
use crate::spectral::{covariance_of_sums, product_of_sums};

/// `bv = (a_1, b_1, …, a_m, b_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        WeightVector::new(values)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.values
    }
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(Error::invalid(format!("weight vector needs an even positive length, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        Ok(WeightVector { values })
    }

    /// `(1, 1, …, 1)` of length `2m`.
    pub fn ones(m: usize) -> Result<Self> {
        WeightVector::new(vec![1.0; 2 * m])
    }

    pub fn m(&self) -> usize {
        self.values.len() / 2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(a_j, b_j)` in order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.chunks_exact(2).map(|c| (c[0], c[1]))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `G(bv, z) = Σ_j a_j Re z_j + b_j Im z_j`.
pub fn g_functional(bv: &WeightVector, z: &[Complex64]) -> Result<f64> {
    Error::check_dim(bv.m(), z.len())?;
    Ok(bv.pairs().zip(z).map(|((a, b), z)| a * z.re + b * z.im).sum())
}

/// Sample mean and its standard error `s / √n`.
pub fn mean_and_std_error(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, f64::NAN);
    }
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Fully specified null distributions for the KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceDistribution {
    Exponential { mean: f64 },
    Normal { mean: f64, variance: f64 },
}

impl ReferenceDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ReferenceDistribution::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(Error::invalid(format!("exponential mean must be positive, got {mean}")))
            }
            ReferenceDistribution::Normal { mean, variance } if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) => {
                Err(Error::invalid(format!("normal variance must be positive, got {variance}")))
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ReferenceDistribution::Exponential { mean } => {
                if x <= 0.0 { 0.0 } else { -(-x / mean).exp_m1() }
            }
            ReferenceDistribution::Normal { mean, variance } => {
                0.5 * erfc(-(x - mean) / (variance.sqrt() * SQRT_2))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let p = if t < 1.0 {
        // P(K ≤ t) = √(2π)/t Σ_{k≥1} exp(-(2k-1)²π²/(8t²)); converges fast for small t
        let mut cdf = 0.0;
        for k in 1..100 {
            let j = (2 * k - 1) as f64;
            let term = (-(j * j) * PI * PI / (8.0 * t * t)).exp();
            cdf += term;
            if term < 1e-16 {
                break;
            }
        }
        1.0 - (2.0 * PI).sqrt() / t * cdf
    } else {
        let mut sum = 0.0;
        for k in 1..1000 {
            let kf = k as f64;
            let term = 2.0 * (-2.0 * kf * kf * t * t).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-10 {
                break;
            }
        }
        sum
    };
    p.clamp(0.0, 1.0)
}

/// One-sample KS statistic `D = sup |F̂ - F|` and its asymptotic p-value.
pub fn ks_statistic(samples: &[f64], reference: &ReferenceDistribution) -> Result<KsResult> {
    reference.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("KS test needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("KS samples contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(KsResult { statistic, p_value: kolmogorov_survival(n.sqrt() * statistic) })
}

/// Largest absolute Pearson correlation between distinct columns of an
/// `R × m` matrix.
pub fn cross_frequency_independence(matrix: &[Vec<f64>]) -> Result<f64> {
    let r = matrix.len();
    let m = matrix.first().map_or(0, Vec::len);
    if r < 2 || m < 2 {
        return Err(Error::invalid(format!("need at least 2 rows and 2 columns, got {r} x {m}")));
    }
    if matrix.iter().any(|row| row.len() != m) {
        return Err(Error::invalid("ragged periodogram matrix"));
    }
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let col: Vec<f64> = matrix.iter().map(|row| row[j]).collect();
            let mean = col.iter().sum::<f64>() / r as f64;
            col.into_iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if let Some(j) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::invalid(format!("column {} has zero variance", j + 1)));
    }
    let mut max = 0.0f64;
    for j in 0..m {
        for k in j + 1..m {
            let dot: f64 = columns[j].iter().zip(&columns[k]).map(|(a, b)| a * b).sum();
            max = max.max((dot / (norms[j] * norms[k])).abs().min(1.0));
        }
    }
    Ok(max)
}

/// Exact covariance of `(Re S_1, Im S_1, …, Re S_m, Im S_m) / √V`.
pub fn exact_coordinate_covariance(spec: &LinearFieldSpec, freqs: &[Frequency], dims: &BoxDims) -> Result<Vec<Vec<f64>>> {
    let m = freqs.len();
    let mut cov = vec![vec![0.0; 2 * m]; 2 * m];
    for j in 0..m {
        for k in 0..m {
            let c = covariance_of_sums(spec, &freqs[j], &freqs[k], dims)?;
            let p = product_of_sums(spec, &freqs[j], &freqs[k], dims)?;
            cov[2 * j][2 * k] = 0.5 * (c.re + p.re);
            cov[2 * j + 1][2 * k + 1] = 0.5 * (c.re - p.re);
            cov[2 * j][2 * k + 1] = 0.5 * (p.im - c.im);
            cov[2 * j + 1][2 * k] = 0.5 * (p.im + c.im);
        }
    }
    Ok(cov)
}

/// Exact `E[G(bv, S/√V)²]`.
pub fn exact_g_second_moment(spec: &LinearFieldSpec, freqs: &[Frequency], dims: &BoxDims, bv: &WeightVector) -> Result<f64> {
    Error::check_dim(bv.m(), freqs.len())?;
    let cov = exact_coordinate_covariance(spec, freqs, dims)?;
    let w = bv.values();
    Ok((0..w.len()).flat_map(|i| (0..w.len()).map(move |j| (i, j))).map(|(i, j)| w[i] * w[j] * cov[i][j]).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub label: String,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub replications: usize,
    pub seed: u64,
    pub dims: BoxDims,
    pub frequencies: Vec<Frequency>,
    pub spectral_density: f64,
    /// `f(λ)/2`.
    pub target_variance: f64,
    /// Empirical covariance of `(Re S_j, Im S_j)_j / √V`, `2m × 2m`.
    pub covariance: Vec<Vec<f64>>,
    /// `max |covariance - (f/2) I|`.
    pub max_covariance_error: f64,
    pub coordinate_means: Vec<f64>,
    pub coordinate_mean_std_errors: Vec<f64>,
    /// Each coordinate against `N(0, f/2)`.
    pub coordinate_ks: Vec<KsEntry>,
    pub periodogram_means: Vec<f64>,
    pub periodogram_mean_std_errors: Vec<f64>,
    /// Each periodogram against `Exponential(mean f)`.
    pub periodogram_ks: Vec<KsEntry>,
    /// `None` when `m = 1`.
    pub max_cross_frequency_correlation: Option<f64>,
}

/// Raw output of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub sums: Vec<Complex64>,
    pub periodograms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltRun {
    pub report: CltReport,
    pub replications: Vec<Replication>,
}

impl CltRun {
    /// One row per replication: `rep, re_1, im_1, …, I_1, …`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let m = self.report.frequencies.len();
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["rep".to_string()];
        for j in 1..=m {
            header.push(format!("re_{j}"));
            header.push(format!("im_{j}"));
        }
        header.extend((1..=m).map(|j| format!("I_{j}")));
        let io = |e: csv::Error| Error::invalid(format!("writing CSV: {e}"));
        writer.write_record(&header).map_err(io)?;
        for (i, rep) in self.replications.iter().enumerate() {
            let mut row = vec![i.to_string()];
            for s in &rep.sums {
                row.push(format!("{:e}", s.re));
                row.push(format!("{:e}", s.im));
            }
            row.extend(rep.periodograms.iter().map(|x| format!("{x:e}")));
            writer.write_record(&row).map_err(io)?;
        }
        writer.flush().map_err(|e| Error::invalid(format!("writing CSV: {e}")))
    }
}

/// `f(λ)`, rejecting the degenerate case `f(λ) = 0`.
fn nondegenerate_density(spec: &LinearFieldSpec, scheme: &SchemeConfig) -> Result<f64> {
    let f = spec.spectral_density(&scheme.base)?;
    if spec.variance() == 0.0 || f <= 1e-12 * spec.variance() {
        return Err(Error::DegenerateSpectrum(f));
    }
    Ok(f)
}

fn checked_frequencies(scheme: &SchemeConfig, dims: &BoxDims) -> Result<Vec<Frequency>> {
    scheme.validate()?;
    let levels = scheme.scheme(std::slice::from_ref(dims))?;
    let check = check_separation(&levels, &scheme.separation())?;
    if let Some(v) = check.violation {
        return Err(Error::invalid(format!(
            "frequencies {} and {} are not separated on the {dims} box",
            v.j, v.k
        )));
    }
    Ok(levels.levels.into_iter().next().map(|l| l.freqs).unwrap_or_default())
}

fn simulate(
    spec: &LinearFieldSpec,
    freqs: &[Frequency],
    dims: &BoxDims,
    replications: usize,
    seed: u64,
    level: u64,
) -> Result<Vec<Replication>> {
    let shift = vec![0i64; dims.dim()];
    (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let sample = spec.generate(dims, &shift, replication_seed(seed, level, rep))?;
            let points = periodogram_vector(&sample, freqs)?;
            Ok(Replication {
                sums: points.iter().map(|p| p.sum).collect(),
                periodograms: points.iter().map(|p| p.periodogram).collect(),
            })
        })
        .collect()
}

pub fn run_clt_experiment(
    spec: &LinearFieldSpec,
    scheme: &SchemeConfig,
    dims: &BoxDims,
    replications: usize,
    seed: u64,
) -> Result<CltRun> {
    Error::check_dim(spec.dim(), dims.dim())?;
    if replications < 2 {
        return Err(Error::invalid("CLT experiment needs at least 2 replications"));
    }
    let f = nondegenerate_density(spec, scheme)?;
    let freqs = checked_frequencies(scheme, dims)?;
    let reps = simulate(spec, &freqs, dims, replications, seed, 0)?;
    let m = freqs.len();
    let root_v = (dims.volume() as f64).sqrt();
    let r = replications as f64;

    // coordinates[i][rep], i = 2j (real part) or 2j + 1 (imaginary part)
    let coordinates: Vec<Vec<f64>> = (0..2 * m)
        .map(|i| {
            reps.iter()
                .map(|rep| {
                    let s = rep.sums[i / 2];
                    (if i % 2 == 0 { s.re } else { s.im }) / root_v
                })
                .collect()
        })
        .collect();
    let stats: Vec<(f64, f64)> = coordinates.iter().map(|c| mean_and_std_error(c.iter().copied())).collect();
    let target = f / 2.0;
    let mut covariance = vec![vec![0.0; 2 * m]; 2 * m];
    let mut max_covariance_error = 0.0f64;
    for i in 0..2 * m {
        for j in 0..2 * m {
            let c = coordinates[i]
                .iter()
                .zip(&coordinates[j])
                .map(|(x, y)| (x - stats[i].0) * (y - stats[j].0))
                .sum::<f64>()
                / (r - 1.0);
            covariance[i][j] = c;
            let expected = if i == j { target } else { 0.0 };
            max_covariance_error = max_covariance_error.max((c - expected).abs());
        }
    }
    let normal = ReferenceDistribution::Normal { mean: 0.0, variance: target };
    let coordinate_ks = coordinates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let ks = ks_statistic(c, &normal)?;
            let part = if i % 2 == 0 { "re" } else { "im" };
            Ok(KsEntry { label: format!("{part}_{}", i / 2 + 1), statistic: ks.statistic, p_value: ks.p_value })
        })
        .collect::<Result<_>>()?;

    let periodograms: Vec<Vec<f64>> = (0..m).map(|j| reps.iter().map(|rep| rep.periodograms[j]).collect()).collect();
    let exponential = ReferenceDistribution::Exponential { mean: f };
    let periodogram_ks = periodograms
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let ks = ks_statistic(c, &exponential)?;
            Ok(KsEntry { label: format!("I_{}", j + 1), statistic: ks.statistic, p_value: ks.p_value })
        })
        .collect::<Result<_>>()?;
    let periodogram_stats: Vec<(f64, f64)> = periodograms.iter().map(|c| mean_and_std_error(c.iter().copied())).collect();
    let max_cross_frequency_correlation = if m >= 2 {
        let matrix: Vec<Vec<f64>> = reps.iter().map(|rep| rep.periodograms.clone()).collect();
        Some(cross_frequency_independence(&matrix)?)
    } else {
        None
    };

    let report = CltReport {
        replications,
        seed,
        dims: dims.clone(),
        frequencies: freqs,
        spectral_density: f,
        target_variance: target,
        covariance,
        max_covariance_error,
        coordinate_means: stats.iter().map(|s| s.0).collect(),
        coordinate_mean_std_errors: stats.iter().map(|s| s.1).collect(),
        coordinate_ks,
        periodogram_means: periodogram_stats.iter().map(|s| s.0).collect(),
        periodogram_mean_std_errors: periodogram_stats.iter().map(|s| s.1).collect(),
        periodogram_ks,
        max_cross_frequency_correlation,
    };
    Ok(CltRun { report, replications: reps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MillerRow {
    pub n: usize,
    pub dims: BoxDims,
    /// `½ f(λ) ‖bv‖²`.
    pub target: f64,
    /// Monte Carlo `E[G(bv, S/√V)²]`.
    pub estimate: f64,
    pub std_error: f64,
    /// `|target - estimate|`.
    pub discrepancy: f64,
    /// Exact `E[G(bv, S/√V)²]` from the lag-grouped second moments.
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MillerReport {
    pub weights: WeightVector,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<MillerRow>,
}

pub fn miller_check(
    spec: &LinearFieldSpec,
    scheme: &SchemeConfig,
    bv: &WeightVector,
    dims_sequence: &[BoxDims],
    replications: usize,
    seed: u64,
) -> Result<MillerReport> {
    if replications < 2 {
        return Err(Error::invalid("Miller check needs at least 2 replications"));
    }
    if bv.m() != scheme.m {
        return Err(Error::invalid(format!("weight vector has {} pairs, scheme has m = {}", bv.m(), scheme.m)));
    }
    let f = nondegenerate_density(spec, scheme)?;
    let target = 0.5 * f * bv.norm_sqr();
    let mut rows = Vec::with_capacity(dims_sequence.len());
    for (level, dims) in dims_sequence.iter().enumerate() {
        Error::check_dim(spec.dim(), dims.dim())?;
        let freqs = checked_frequencies(scheme, dims)?;
        let reps = simulate(spec, &freqs, dims, replications, seed, level as u64)?;
        let root_v = (dims.volume() as f64).sqrt();
        let squares: Vec<f64> = reps
            .iter()
            .map(|rep| {
                let z: Vec<Complex64> = rep.sums.iter().map(|s| s / root_v).collect();
                g_functional(bv, &z).map(|g| g * g)
            })
            .collect::<Result<_>>()?;
        let (estimate, std_error) = mean_and_std_error(squares.iter().copied());
        rows.push(MillerRow {
            n: level + 1,
            dims: dims.clone(),
            target,
            estimate,
            std_error,
            discrepancy: (target - estimate).abs(),
            exact: exact_g_second_moment(spec, &freqs, dims, bv)?,
        });
    }
    Ok(MillerReport { weights: bv.clone(), replications, seed, rows })
}
