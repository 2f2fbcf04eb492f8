//! Admissible frequencies and separated frequency schemes.
//!
//! Frequencies `λ^(j,n)` sharing a limit `λ` are separated at level `n` when
//! some coordinate `s` has `|λ_s^(j,n) - λ_s^(k,n)| > (v_s^(n))^{-(1/2 - δ)}`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodogram::{BoxDims, Frequency};

/// Gap multiplier used by [`build_separated`].
pub const SEPARATION_MARGIN: f64 = 2.0;

/// `true` iff some coordinate lies outside `{-π, 0, π}` (exact comparison).
pub fn is_admissible(lambda: &Frequency) -> bool {
    lambda.coords().iter().any(|&c| c != -PI && c != 0.0 && c != PI)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid(format!("separation exponent delta must satisfy 0 < delta < 1/2, got {delta}")))
    }
}

/// Threshold `v^{-(1/2 - δ)}`.
pub fn separation_threshold(side: usize, delta: f64) -> f64 {
    (side as f64).powf(-(0.5 - delta))
}

/// `λ^(j) = λ + (j-1) · 2 · v_axis^{-(1/2-δ)} · e_axis`, `j = 1..=m`.
pub fn build_separated(lambda: &Frequency, m: usize, delta: f64, axis: usize, dims: &BoxDims) -> Result<Vec<Frequency>> {
    Error::check_dim(lambda.dim(), dims.dim())?;
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::invalid("need at least one frequency"));
    }
    if axis >= lambda.dim() {
        return Err(Error::invalid(format!("axis {axis} out of range for dimension {}", lambda.dim())));
    }
    if !is_admissible(lambda) {
        return Err(Error::invalid(format!("base frequency {:?} is not admissible", lambda.coords())));
    }
    let gap = SEPARATION_MARGIN * separation_threshold(dims.sides()[axis], delta);
    (0..m)
        .map(|j| {
            let mut coords = lambda.coords().to_vec();
            coords[axis] += j as f64 * gap;
            Frequency::new(coords).map_err(|_| {
                Error::invalid(format!(
                    "frequency {} of {m} leaves (-π, π] along axis {axis}; use fewer frequencies or move the base",
                    j + 1
                ))
            })
        })
        .collect()
}

/// The `δ` for which [`build_separated`] spaces neighbours by exactly
/// `2π q / v`, a Fourier-grid step of a side of length `v`.
pub fn delta_for_fourier_gap(side: usize, q: usize) -> Result<f64> {
    // 2 v^{δ - 1/2} = 2π q / v  ⇔  v^{δ + 1/2} = π q
    let delta = (PI * q as f64).ln() / (side as f64).ln() - 0.5;
    check_delta(delta).map_err(|_| {
        Error::invalid(format!("no admissible delta puts the gap at 2π·{q}/{side} (would be {delta})"))
    })?;
    let gap = SEPARATION_MARGIN * separation_threshold(side, delta);
    debug_assert!((gap - TAU * q as f64 / side as f64).abs() < 1e-12);
    Ok(delta)
}

/// Serialized scheme parameters: `{base, m, delta, axis}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub base: Frequency,
    pub m: usize,
    pub delta: f64,
    pub axis: usize,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if self.m == 0 {
            return Err(Error::invalid("scheme needs m >= 1"));
        }
        if self.axis >= self.base.dim() {
            return Err(Error::invalid(format!("scheme axis {} out of range", self.axis)));
        }
        if !is_admissible(&self.base) {
            return Err(Error::invalid("scheme base frequency is not admissible"));
        }
        Ok(())
    }

    pub fn frequencies(&self, dims: &BoxDims) -> Result<Vec<Frequency>> {
        build_separated(&self.base, self.m, self.delta, self.axis, dims)
    }

    pub fn scheme(&self, dims_sequence: &[BoxDims]) -> Result<FrequencyScheme> {
        let levels = dims_sequence
            .iter()
            .map(|dims| Ok(SchemeLevel { dims: dims.clone(), freqs: self.frequencies(dims)? }))
            .collect::<Result<_>>()?;
        Ok(FrequencyScheme { base: self.base.clone(), levels })
    }

    pub fn separation(&self) -> SeparationSpec {
        SeparationSpec::uniform(self.m, self.delta, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeLevel {
    pub dims: BoxDims,
    pub freqs: Vec<Frequency>,
}

/// Per-level frequency lists `(λ^(1,n), …, λ^(m,n))`; level `n` is
/// `levels[n - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyScheme {
    pub base: Frequency,
    pub levels: Vec<SchemeLevel>,
}

impl FrequencyScheme {
    pub fn m(&self) -> usize {
        self.levels.first().map_or(0, |l| l.freqs.len())
    }

    /// `max_j max_s |λ_s^(j,n) - λ_s|` per level.
    pub fn distance_to_base(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|level| {
                level
                    .freqs
                    .iter()
                    .flat_map(|f| f.coords().iter().zip(self.base.coords()).map(|(a, b)| (a - b).abs()))
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// `δ(j, k)` and `N(j, k)` for every unordered pair (stored symmetric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationSpec {
    pub m: usize,
    pub delta: Vec<Vec<f64>>,
    pub threshold: Vec<Vec<usize>>,
}

impl SeparationSpec {
    pub fn uniform(m: usize, delta: f64, threshold: usize) -> Self {
        SeparationSpec { m, delta: vec![vec![delta; m]; m], threshold: vec![vec![threshold; m]; m] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta.len() != self.m || self.threshold.len() != self.m {
            return Err(Error::invalid("separation tables must be m x m"));
        }
        for j in 0..self.m {
            if self.delta[j].len() != self.m || self.threshold[j].len() != self.m {
                return Err(Error::invalid("separation tables must be m x m"));
            }
            for k in 0..self.m {
                if j == k {
                    continue;
                }
                check_delta(self.delta[j][k])?;
                if self.threshold[j][k] == 0 {
                    return Err(Error::invalid("threshold indices N(j,k) start at 1"));
                }
            }
        }
        Ok(())
    }
}

/// The first violating `(j, k, n)`, all 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationViolation {
    pub j: usize,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationCheck {
    pub holds: bool,
    pub violation: Option<SeparationViolation>,
}

pub fn check_separation(scheme: &FrequencyScheme, sep: &SeparationSpec) -> Result<SeparationCheck> {
    sep.validate()?;
    for level in &scheme.levels {
        if level.freqs.len() != sep.m {
            return Err(Error::invalid(format!(
                "scheme level has {} frequencies, separation spec expects {}",
                level.freqs.len(),
                sep.m
            )));
        }
    }
    for j in 0..sep.m {
        for k in j + 1..sep.m {
            for (idx, level) in scheme.levels.iter().enumerate() {
                let n = idx + 1;
                if n < sep.threshold[j][k] {
                    continue;
                }
                let (a, b) = (&level.freqs[j], &level.freqs[k]);
                let separated = (0..level.dims.dim()).any(|s| {
                    (a.coords()[s] - b.coords()[s]).abs()
                        > separation_threshold(level.dims.sides()[s], sep.delta[j][k])
                });
                if !separated {
                    return Ok(SeparationCheck {
                        holds: false,
                        violation: Some(SeparationViolation { j: j + 1, k: k + 1, n }),
                    });
                }
            }
        }
    }
    Ok(SeparationCheck { holds: true, violation: None })
}
