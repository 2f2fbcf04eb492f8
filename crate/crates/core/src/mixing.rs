//! Lower bounds on the maximal correlation `ρ(σ(S), σ(T))` and on the
//! profile `ρ'(n)`.
//!
//! For jointly Gaussian vectors the maximal correlation over square-integrable
//! functions is attained by linear functions, so the first canonical
//! correlation is exact for the generated fields. For other laws it is only a
//! lower bound.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocking::MixingProfile;
use crate::error::{Error, Result};
use crate::fieldgen::LinearFieldSpec;

/// Upper limit on candidate pairs enumerated by [`rho_prime_profile`].
pub const PAIR_BUDGET: u64 = 5_000_000;

/// Eigenvalues below this fraction of the largest get the ridge.
const RIDGE: f64 = 1e-12;

/// Two non-empty finite index sets separated along `axis`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSetPair {
    s: Vec<Vec<i64>>,
    t: Vec<Vec<i64>>,
    axis: usize,
}

/// `min_{k∈S, l∈T} |k_u - l_u|`.
fn axis_separation(s: &[Vec<i64>], t: &[Vec<i64>], axis: usize) -> u64 {
    s.iter()
        .flat_map(|k| t.iter().map(move |l| k[axis].abs_diff(l[axis])))
        .min()
        .unwrap_or(0)
}

impl IndexSetPair {
    pub fn new(s: Vec<Vec<i64>>, t: Vec<Vec<i64>>, axis: usize) -> Result<Self> {
        if s.is_empty() || t.is_empty() {
            return Err(Error::invalid("index sets must be non-empty"));
        }
        let d = s[0].len();
        if let Some(k) = s.iter().chain(&t).find(|k| k.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: k.len() });
        }
        if axis >= d {
            return Err(Error::invalid(format!("separation axis {axis} out of range for dimension {d}")));
        }
        if s.iter().any(|k| t.contains(k)) {
            return Err(Error::invalid("index sets overlap"));
        }
        if axis_separation(&s, &t, axis) == 0 {
            return Err(Error::invalid(format!("index sets share a coordinate along axis {axis}")));
        }
        Ok(IndexSetPair { s, t, axis })
    }

    pub fn s(&self) -> &[Vec<i64>] {
        &self.s
    }

    pub fn t(&self) -> &[Vec<i64>] {
        &self.t
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn separation(&self) -> u64 {
        axis_separation(&self.s, &self.t, self.axis)
    }

    pub fn swapped(&self) -> Self {
        IndexSetPair { s: self.t.clone(), t: self.s.clone(), axis: self.axis }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCorrelation {
    pub rho: f64,
    /// A block covariance was singular and got the ridge.
    pub regularized: bool,
}

/// Real coordinates: `Re X_k` for real fields, `(Re X_k, Im X_k)` otherwise.
fn real_covariance(spec: &LinearFieldSpec, a: &[Vec<i64>], b: &[Vec<i64>]) -> Result<DMatrix<f64>> {
    let parts = if spec.is_real() { 1 } else { 2 };
    let mut out = DMatrix::zeros(a.len() * parts, b.len() * parts);
    for (i, k) in a.iter().enumerate() {
        for (j, l) in b.iter().enumerate() {
            let h: Vec<i64> = k.iter().zip(l).map(|(x, y)| x - y).collect();
            // c = E X_k conj(X_l), p = E X_k X_l
            let c = spec.autocovariance(&h)?;
            if parts == 1 {
                out[(i, j)] = c.re;
                continue;
            }
            let p = spec.pseudo_autocovariance(&h)?;
            out[(2 * i, 2 * j)] = 0.5 * (c.re + p.re);
            out[(2 * i + 1, 2 * j + 1)] = 0.5 * (c.re - p.re);
            out[(2 * i, 2 * j + 1)] = 0.5 * (p.im - c.im);
            out[(2 * i + 1, 2 * j)] = 0.5 * (p.im + c.im);
        }
    }
    Ok(out)
}

/// `C^{-1/2}`, with the ridge applied to eigenvalues below `RIDGE · max`.
fn inverse_sqrt(c: DMatrix<f64>) -> Option<(DMatrix<f64>, bool)> {
    let eig = SymmetricEigen::new(c);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return None;
    }
    let floor = RIDGE * max;
    let mut regularized = false;
    let scales = eig.eigenvalues.map(|l| {
        if l < floor {
            regularized = true;
            1.0 / (l.max(0.0) + floor).sqrt()
        } else {
            1.0 / l.sqrt()
        }
    });
    let v = &eig.eigenvectors;
    Some((v * DMatrix::from_diagonal(&scales) * v.transpose(), regularized))
}

/// First canonical correlation of the field values on `S` and `T`.
pub fn canonical_rho(spec: &LinearFieldSpec, pair: &IndexSetPair) -> Result<CanonicalCorrelation> {
    Error::check_dim(spec.dim(), pair.s[0].len())?;
    let (ws, reg_s) = match inverse_sqrt(real_covariance(spec, &pair.s, &pair.s)?) {
        Some(w) => w,
        None => return Ok(CanonicalCorrelation { rho: 0.0, regularized: true }),
    };
    let (wt, reg_t) = match inverse_sqrt(real_covariance(spec, &pair.t, &pair.t)?) {
        Some(w) => w,
        None => return Ok(CanonicalCorrelation { rho: 0.0, regularized: true }),
    };
    let cross = real_covariance(spec, &pair.s, &pair.t)?;
    let whitened = ws * cross * wt;
    let rho = whitened.singular_values().iter().copied().fold(0.0, f64::max);
    Ok(CanonicalCorrelation { rho: rho.clamp(0.0, 1.0), regularized: reg_s || reg_t })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub s: Vec<Vec<i64>>,
    pub t: Vec<Vec<i64>>,
    pub rho: f64,
}

/// Certified lower bounds on `ρ'(n)`, `n = 1..=n_max`, with a maximizing
/// pair for each `n` that has any admissible pair. The JSON form carries the
/// [`MixingProfile`] fields at top level, so it parses as a profile too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEstimate {
    pub values: BTreeMap<u64, f64>,
    pub dependence_range: Option<u64>,
    pub witnesses: BTreeMap<u64, Witness>,
    pub window_radius: u64,
    pub max_set_size: usize,
    pub pairs_evaluated: u64,
    pub regularized_pairs: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All subsets of `0..n` with `1..=max_size` elements, in size-then-lexicographic order.
fn subsets(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=max_size.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            let Some(i) = (0..size).rev().find(|&i| idx[i] < n - size + i) else { break };
            idx[i] += 1;
            for j in i + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Exhaustive maximization of [`canonical_rho`] over pairs of subsets of the
/// window `{-W..=W}^d` with at most `max_set_size` sites each.
///
/// The candidate count is `M(M-1)/2`, `M = Σ_{k≤max} C((2W+1)^d, k)`; it must
/// not exceed [`PAIR_BUDGET`].
pub fn rho_prime_profile(
    spec: &LinearFieldSpec,
    window_radius: u64,
    max_set_size: usize,
    n_max: u64,
) -> Result<ProfileEstimate> {
    if max_set_size == 0 || n_max == 0 {
        return Err(Error::invalid("set size and n_max must be at least 1"));
    }
    let d = spec.dim();
    let side = 2 * window_radius + 1;
    let sites_count = side
        .checked_pow(d as u32)
        .filter(|&n| n <= 64)
        .ok_or_else(|| Error::invalid(format!("window {window_radius} in dimension {d} has more than 64 sites")))?;
    let subset_count: u64 = (1..=max_set_size as u64).map(|k| binomial(sites_count, k)).fold(0, u64::saturating_add);
    let count = subset_count.saturating_mul(subset_count.saturating_sub(1)) / 2;
    if count > PAIR_BUDGET {
        return Err(Error::BudgetExceeded { count, budget: PAIR_BUDGET });
    }

    let w = window_radius as i64;
    let sites: Vec<Vec<i64>> = (0..sites_count)
        .map(|mut idx| {
            let mut k = vec![0; d];
            for c in k.iter_mut().rev() {
                *c = (idx % side) as i64 - w;
                idx /= side;
            }
            k
        })
        .collect();
    let sets: Vec<Vec<Vec<i64>>> = subsets(sites.len(), max_set_size)
        .into_iter()
        .map(|ix| ix.into_iter().map(|i| sites[i].clone()).collect())
        .collect();

    // (a, b, largest axis separation) for every unordered pair separated somewhere
    let candidates: Vec<(usize, usize, u64)> = (0..sets.len())
        .flat_map(|a| (a + 1..sets.len()).map(move |b| (a, b)))
        .filter_map(|(a, b)| {
            let sep = (0..d).map(|u| axis_separation(&sets[a], &sets[b], u)).max().unwrap_or(0);
            (sep > 0).then_some((a, b, sep))
        })
        .collect();
    let results: Vec<CanonicalCorrelation> = candidates
        .par_iter()
        .map(|&(a, b, sep)| {
            let axis = (0..d).find(|&u| axis_separation(&sets[a], &sets[b], u) == sep).unwrap_or(0);
            canonical_rho(spec, &IndexSetPair { s: sets[a].clone(), t: sets[b].clone(), axis })
        })
        .collect::<Result<_>>()?;

    let mut best: Vec<Option<(f64, usize)>> = vec![None; n_max as usize + 1];
    for (i, (&(_, _, sep), res)) in candidates.iter().zip(&results).enumerate() {
        for slot in best.iter_mut().take(sep.min(n_max) as usize + 1).skip(1) {
            if slot.is_none_or(|(rho, _)| res.rho > rho) {
                *slot = Some((res.rho, i));
            }
        }
    }
    let range = spec.dependence_range();
    let mut values = BTreeMap::new();
    let mut witnesses = BTreeMap::new();
    for n in 1..=n_max {
        let entry = best[n as usize];
        let rho = if n > range { 0.0 } else { entry.map_or(0.0, |e| e.0) };
        values.insert(n, rho);
        if let Some((r, i)) = entry {
            let (a, b, _) = candidates[i];
            witnesses.insert(n, Witness { s: sets[a].clone(), t: sets[b].clone(), rho: r });
        }
    }
    let profile = MixingProfile::new(values, Some(range))?;
    Ok(ProfileEstimate {
        values: profile.values,
        dependence_range: profile.dependence_range,
        witnesses,
        window_radius,
        max_set_size,
        pairs_evaluated: candidates.len() as u64,
        regularized_pairs: results.iter().filter(|r| r.regularized).count() as u64,
    })
}

impl ProfileEstimate {
    pub fn profile(&self) -> MixingProfile {
        MixingProfile { values: self.values.clone(), dependence_range: self.dependence_range }
    }
}
