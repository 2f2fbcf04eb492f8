//! Bernstein blocking along the first coordinate.
//!
//! For a first side `v1` the plan takes small slices of width
//! `s = ⌊v1^{1/3}⌋`, `p = min{s, ⌊1/√ρ'(s)⌋}` big slices, and the big-slice
//! width `r` solving `(r - 1 + s) p ≤ v1 < (r + s) p`. Big slice `l` covers
//! `(l-1)(r+s) < k_1 ≤ l r + (l-1) s`; everything else is the leftover set.
//!
//! The truncation split writes each demodulated value as
//! `X_k^λ = B_{k,q} + T_{k,q}` around the threshold `⟨k⟩^q`, `⟨k⟩ = Π k_i`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::fieldgen::{FieldSample, InnovationKind, LinearFieldSpec};
use crate::frequencies::SchemeConfig;
use crate::periodogram::{BoxDims, Frequency};
use crate::rng::replication_seed;
use crate::stats::{g_functional, mean_and_std_error, WeightVector};

/// Values of `ρ'(n)`, nonincreasing in `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub values: BTreeMap<u64, f64>,
    /// Smallest `m` with `ρ'(n) = 0` for all `n > m`, when known.
    pub dependence_range: Option<u64>,
}

impl MixingProfile {
    pub fn new(values: BTreeMap<u64, f64>, dependence_range: Option<u64>) -> Result<Self> {
        let profile = MixingProfile { values, dependence_range };
        profile.validate()?;
        Ok(profile)
    }

    /// Zero beyond `range`, no information (the trivial bound 1) before.
    pub fn m_dependent(range: u64) -> Self {
        MixingProfile { values: BTreeMap::new(), dependence_range: Some(range) }
    }

    pub fn validate(&self) -> Result<()> {
        let mut previous = 1.0;
        for (&n, &rho) in &self.values {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::invalid(format!("rho'({n}) = {rho} outside [0, 1]")));
            }
            if rho > previous {
                return Err(Error::invalid(format!("profile increases at n = {n}")));
            }
            if let Some(m) = self.dependence_range {
                if n > m && rho != 0.0 {
                    return Err(Error::invalid(format!(
                        "rho'({n}) = {rho} but the dependence range is {m}"
                    )));
                }
            }
            previous = rho;
        }
        Ok(())
    }

    /// Upper bound on `ρ'(n)` implied by the stored values.
    pub fn rho(&self, n: u64) -> f64 {
        if matches!(self.dependence_range, Some(m) if n > m) {
            return 0.0;
        }
        self.values.range(..=n).next_back().map_or(1.0, |(_, &v)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingPlan {
    pub v1: u64,
    /// Small-slice width.
    pub s: u64,
    /// Number of big slices.
    pub p: u64,
    /// Big-slice width.
    pub r: u64,
    pub q: f64,
}

/// `⌊x^{1/3}⌋` in integer arithmetic.
fn integer_cbrt(x: u64) -> u64 {
    let mut c = (x as f64).cbrt().round() as u64;
    while (c as u128).pow(3) > x as u128 {
        c -= 1;
    }
    while ((c + 1) as u128).pow(3) <= x as u128 {
        c += 1;
    }
    c
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 0.25 {
        Ok(())
    } else {
        Err(Error::invalid(format!("truncation exponent q must satisfy 0 < q < 1/4, got {q}")))
    }
}

impl BlockingPlan {
    /// `(r - 1 + s) p ≤ v1 < (r + s) p`.
    pub fn satisfies_width_equation(&self) -> bool {
        let (v1, s, p, r) = (self.v1 as u128, self.s as u128, self.p as u128, self.r as u128);
        r >= 1 && (r - 1 + s) * p <= v1 && v1 < (r + s) * p
    }

    /// `v1 - p r`, the first-axis width of the leftover set.
    pub fn leftover_width(&self) -> u64 {
        self.v1.saturating_sub(self.p * self.r)
    }

    /// `v1 - p r ≤ v1^{2/3}`, checked as `(v1 - p r)³ ≤ v1²`.
    pub fn leftover_within_two_thirds(&self) -> bool {
        (self.leftover_width() as u128).pow(3) <= (self.v1 as u128).pow(2)
    }
}

pub fn plan(v1: u64, profile: &MixingProfile, q: f64) -> Result<BlockingPlan> {
    if v1 < 8 {
        return Err(Error::invalid(format!("blocking needs v1 >= 8, got {v1}")));
    }
    check_q(q)?;
    profile.validate()?;
    let s = integer_cbrt(v1);
    let rho = profile.rho(s);
    let p = if rho == 0.0 {
        s
    } else {
        let cap = (1.0 / rho.sqrt()).floor();
        if cap >= s as f64 { s } else { cap as u64 }
    };
    // r = ⌊v1/p⌋ - s + 1 is the unique solution of (r-1+s)p ≤ v1 < (r+s)p.
    let r = (v1 / p + 1)
        .checked_sub(s)
        .filter(|r| *r >= 1)
        .ok_or_else(|| Error::invalid(format!("no positive big-slice width for v1 = {v1}, s = {s}, p = {p}")))?;
    let plan = BlockingPlan { v1, s, p, r, q };
    debug_assert!(plan.satisfies_width_equation());
    Ok(plan)
}

/// Inclusive range of first coordinates `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisRange {
    pub start: u64,
    pub end: u64,
}

impl AxisRange {
    pub fn width(&self) -> u64 {
        self.end + 1 - self.start
    }

    pub fn contains(&self, k1: u64) -> bool {
        self.start <= k1 && k1 <= self.end
    }
}

/// Big blocks `𝔹(l)` and the leftover set as first-axis slabs of the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockIndexSets {
    pub dims: BoxDims,
    pub blocks: Vec<AxisRange>,
    pub leftover: Vec<AxisRange>,
}

impl BlockIndexSets {
    /// `v_2 ⋯ v_d`.
    fn cross_section(&self) -> u64 {
        self.dims.sides()[1..].iter().map(|&v| v as u64).product()
    }

    pub fn block_cardinality(&self, l: usize) -> u64 {
        self.blocks[l].width() * self.cross_section()
    }

    pub fn leftover_cardinality(&self) -> u64 {
        self.leftover.iter().map(AxisRange::width).sum::<u64>() * self.cross_section()
    }

    /// Block number (1-based) holding first coordinate `k1`, or `None` for
    /// the leftover set.
    pub fn block_of(&self, k1: u64) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(k1)).map(|l| l + 1)
    }

    pub fn in_leftover(&self, k1: u64) -> bool {
        self.leftover.iter().any(|b| b.contains(k1))
    }
}

pub fn block_index_sets(plan: &BlockingPlan, dims: &BoxDims) -> Result<BlockIndexSets> {
    if dims.sides()[0] as u64 != plan.v1 {
        return Err(Error::invalid(format!("plan is for v1 = {}, box has v1 = {}", plan.v1, dims.sides()[0])));
    }
    if plan.p == 0 || plan.r == 0 {
        return Err(Error::invalid("plan needs p >= 1 and r >= 1"));
    }
    let span = plan.p as u128 * (plan.r + plan.s) as u128 - plan.s as u128;
    if span > plan.v1 as u128 {
        return Err(Error::invalid(format!("{} blocks of width {} with gaps {} exceed v1 = {}", plan.p, plan.r, plan.s, plan.v1)));
    }
    let blocks: Vec<AxisRange> = (1..=plan.p)
        .map(|l| AxisRange { start: (l - 1) * (plan.r + plan.s) + 1, end: l * plan.r + (l - 1) * plan.s })
        .collect();
    let mut leftover = Vec::new();
    let mut next = 1;
    for b in &blocks {
        if b.start > next {
            leftover.push(AxisRange { start: next, end: b.start - 1 });
        }
        next = b.end + 1;
    }
    if next <= plan.v1 {
        leftover.push(AxisRange { start: next, end: plan.v1 });
    }
    Ok(BlockIndexSets { dims: dims.clone(), blocks, leftover })
}

/// Bounded and tail parts of the demodulated field, row-major like the
/// sample. For Gaussian fields the centering constants
/// `E[X_k^λ 1{|X_k| ≤ c}]` and `E[X_k^λ 1{|X_k| > c}]` vanish by the symmetry
/// `X ↦ -X`, so `B` and `T` are the plain indicator products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedField {
    pub dims: BoxDims,
    pub q: f64,
    pub bounded: Vec<Complex64>,
    pub tail: Vec<Complex64>,
}

/// `⟨k⟩ = Π k_i`.
pub fn index_product(k: &[i64]) -> f64 {
    k.iter().map(|&c| c as f64).product()
}

pub fn truncate(sample: &FieldSample, lambda: &Frequency, q: f64) -> Result<TruncatedField> {
    check_q(q)?;
    Error::check_dim(sample.dims().dim(), lambda.dim())?;
    if let Some(w) = sample.shift().iter().find(|w| **w < 0) {
        return Err(Error::invalid(format!("truncation needs positive indices; shift coordinate {w} < 0")));
    }
    let n = sample.values().len();
    let mut bounded = Vec::with_capacity(n);
    let mut tail = Vec::with_capacity(n);
    for (offset, x) in sample.values().iter().enumerate() {
        let k = sample.index_of(offset);
        let threshold = index_product(&k).powf(q);
        let phase: f64 = k.iter().zip(lambda.coords()).map(|(&a, &b)| a as f64 * b).sum();
        let demod = Complex64::from_polar(1.0, -phase) * x;
        if x.norm() <= threshold {
            bounded.push(demod);
            tail.push(Complex64::new(0.0, 0.0));
        } else {
            bounded.push(Complex64::new(0.0, 0.0));
            tail.push(demod);
        }
    }
    Ok(TruncatedField { dims: sample.dims().clone(), q, bounded, tail })
}

/// `(E[|X|²; |X| ≤ c], E[|X|²; |X| > c])` for the marginal law of the field.
pub fn truncated_second_moments(spec: &LinearFieldSpec, threshold: f64) -> (f64, f64) {
    let var = spec.variance();
    if var == 0.0 {
        return (0.0, 0.0);
    }
    let inner = match spec.innovation_kind() {
        InnovationKind::RealGaussian => {
            // σ² (2Φ(z) - 1 - 2zφ(z)), z = c/σ
            let z = threshold / var.sqrt();
            let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            var * (erf(z / std::f64::consts::SQRT_2) - 2.0 * z * density)
        }
        InnovationKind::CircularComplexGaussian => {
            // |X|² ~ Exp(mean σ²)
            let t = threshold * threshold / var;
            var * (1.0 - (-t).exp() * (1.0 + t))
        }
    };
    (inner, var - inner)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegligibilityRow {
    pub n: usize,
    pub dims: BoxDims,
    pub plan: BlockingPlan,
    pub leftover_cardinality: u64,
    /// Monte Carlo `E|Σ_{ℤ} G(bv, B)/√V|²`.
    pub leftover_moment: f64,
    pub leftover_std_error: f64,
    /// Monte Carlo `E|Z_{n,q}/√V|² = Σ_j E|Σ_k T_k^{λ_j}|² / V`.
    pub tail_moment: f64,
    pub tail_std_error: f64,
    /// Closed forms, available when the field is independent across sites.
    pub leftover_exact_independent: Option<f64>,
    pub tail_exact_independent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegligibilityReport {
    pub q: f64,
    pub weights: WeightVector,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<NegligibilityRow>,
}

/// Closed-form leftover and tail moments for a single-tap (independent) field.
fn independent_moments(
    spec: &LinearFieldSpec,
    sets: &BlockIndexSets,
    freqs: &[Frequency],
    bv: &WeightVector,
    q: f64,
) -> (f64, f64) {
    let dims = &sets.dims;
    let probe = FieldSample::from_fn(dims.clone(), vec![0; dims.dim()], |_| Complex64::default())
        .expect("box and shift share a dimension");
    let mut leftover = 0.0;
    let mut tail = 0.0;
    for offset in 0..dims.volume() {
        let k = probe.index_of(offset);
        let (inner, outer) = truncated_second_moments(spec, index_product(&k).powf(q));
        tail += freqs.len() as f64 * outer;
        if !sets.in_leftover(k[0] as u64) {
            continue;
        }
        // G(bv, (e^{-ik·λ_j} B)_j) = Re(c_k B), c_k = Σ_j (a_j - i b_j) e^{-ik·λ_j}
        let c: Complex64 = freqs
            .iter()
            .zip(bv.pairs())
            .map(|(f, (a, b))| {
                let phase: f64 = k.iter().zip(f.coords()).map(|(&x, &l)| x as f64 * l).sum();
                Complex64::new(a, -b) * Complex64::from_polar(1.0, -phase)
            })
            .sum();
        leftover += match spec.innovation_kind() {
            InnovationKind::RealGaussian => c.re * c.re * inner,
            InnovationKind::CircularComplexGaussian => 0.5 * c.norm_sqr() * inner,
        };
    }
    let v = dims.volume() as f64;
    (leftover / v, tail / v)
}

/// Monte Carlo negligibility of the leftover slices and of the truncation tails.
pub fn negligibility_report(
    spec: &LinearFieldSpec,
    scheme: &SchemeConfig,
    dims_sequence: &[BoxDims],
    q: f64,
    bv: &WeightVector,
    replications: usize,
    seed: u64,
) -> Result<NegligibilityReport> {
    check_q(q)?;
    scheme.validate()?;
    if replications < 2 {
        return Err(Error::invalid("negligibility report needs at least 2 replications"));
    }
    if bv.m() != scheme.m {
        return Err(Error::invalid(format!("weight vector has {} pairs, scheme has m = {}", bv.m(), scheme.m)));
    }
    let profile = MixingProfile::m_dependent(spec.dependence_range());
    let mut rows = Vec::with_capacity(dims_sequence.len());
    for (level, dims) in dims_sequence.iter().enumerate() {
        Error::check_dim(spec.dim(), dims.dim())?;
        let plan = plan(dims.sides()[0] as u64, &profile, q)?;
        let sets = block_index_sets(&plan, dims)?;
        let freqs = scheme.frequencies(dims)?;
        let volume = dims.volume() as f64;
        let zero_shift = vec![0i64; dims.dim()];
        let leftover_offsets: Vec<usize> = (0..dims.volume())
            .filter(|&o| sets.in_leftover((o / dims.strides()[0]) as u64 + 1))
            .collect();

        let draws: Vec<(f64, f64)> = (0..replications as u64)
            .into_par_iter()
            .map(|rep| {
                let sample = spec.generate(dims, &zero_shift, replication_seed(seed, level as u64, rep))?;
                let parts: Vec<TruncatedField> =
                    freqs.iter().map(|f| truncate(&sample, f, q)).collect::<Result<_>>()?;
                let mut leftover = 0.0;
                let mut z = vec![Complex64::new(0.0, 0.0); dims.volume()];
                for &o in &leftover_offsets {
                    for (slot, part) in z.iter_mut().zip(&parts) {
                        *slot = part.bounded[o];
                    }
                    leftover += g_functional(bv, &z[..parts.len()])?;
                }
                let tail: f64 = parts
                    .iter()
                    .map(|part| part.tail.iter().sum::<Complex64>().norm_sqr())
                    .sum();
                Ok((leftover * leftover / volume, tail / volume))
            })
            .collect::<Result<_>>()?;
        let (leftover_moment, leftover_std_error) = mean_and_std_error(draws.iter().map(|d| d.0));
        let (tail_moment, tail_std_error) = mean_and_std_error(draws.iter().map(|d| d.1));
        let (leftover_exact, tail_exact) = if spec.taps().len() == 1 {
            let (l, t) = independent_moments(spec, &sets, &freqs, bv, q);
            (Some(l), Some(t))
        } else {
            (None, None)
        };
        rows.push(NegligibilityRow {
            n: level + 1,
            dims: dims.clone(),
            plan,
            leftover_cardinality: sets.leftover_cardinality(),
            leftover_moment,
            leftover_std_error,
            tail_moment,
            tail_std_error,
            leftover_exact_independent: leftover_exact,
            tail_exact_independent: tail_exact,
        });
    }
    Ok(NegligibilityReport { q, weights: bv.clone(), replications, seed, rows })
}
