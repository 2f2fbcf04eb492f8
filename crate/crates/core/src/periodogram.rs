//! Demodulated box sums `S = Σ_{k∈box} e^{-ik·λ} X_k` and periodograms
//! `I = |S|² / V`.
//!
//! Sums are taken directly over the box with pairwise accumulation; the
//! frequencies are arbitrary reals, not Fourier-grid points.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldgen::FieldSample;
use crate::sum;

/// A frequency in `(-π, π]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Frequency {
    coords: Vec<f64>,
}

impl Frequency {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("frequency must have at least one coordinate"));
        }
        if let Some(c) = coords.iter().find(|c| !(**c > -PI && **c <= PI)) {
            return Err(Error::invalid(format!("frequency coordinate {c} outside (-π, π]")));
        }
        Ok(Frequency { coords })
    }

    pub fn zero(dim: usize) -> Self {
        Frequency { coords: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl TryFrom<Vec<f64>> for Frequency {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Frequency::new(coords)
    }
}

impl From<Frequency> for Vec<f64> {
    fn from(f: Frequency) -> Self {
        f.coords
    }
}

/// Side lengths `v ∈ N^d` of the box `{k : 1 ≤ k_j ≤ v_j}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BoxDims {
    sides: Vec<usize>,
}

impl BoxDims {
    pub fn new(sides: Vec<usize>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::invalid("box must have at least one side"));
        }
        if sides.contains(&0) {
            return Err(Error::invalid("box sides must be positive"));
        }
        sides
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| Error::IndexOverflow("box cardinality overflows usize".into()))?;
        Ok(BoxDims { sides })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    /// `V = Π v_j`, the number of sites in the box.
    pub fn volume(&self) -> usize {
        self.sides.iter().product()
    }

    pub fn min_side(&self) -> usize {
        self.sides.iter().copied().min().unwrap_or(0)
    }

    /// Row-major offsets (last coordinate fastest) of the box positions.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.sides.len()];
        for s in (0..self.sides.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * self.sides[s + 1];
        }
        strides
    }
}

impl TryFrom<Vec<usize>> for BoxDims {
    type Error = Error;

    fn try_from(sides: Vec<usize>) -> Result<Self> {
        BoxDims::new(sides)
    }
}

impl From<BoxDims> for Vec<usize> {
    fn from(d: BoxDims) -> Self {
        d.sides
    }
}

impl std::fmt::Display for BoxDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.sides.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// `e^{-i k_s λ_s}` for each axis and each absolute coordinate in the box.
fn axis_phases(sample: &FieldSample, lambda: &Frequency) -> Vec<Vec<Complex64>> {
    sample
        .dims()
        .sides()
        .iter()
        .zip(sample.shift())
        .zip(lambda.coords())
        .map(|((&side, &w), &l)| {
            (1..=side as i64)
                .map(|k| Complex64::from_polar(1.0, -((k + w) as f64) * l))
                .collect()
        })
        .collect()
}

/// `S = Σ_{k∈box} e^{-ik·λ} X_k`, with `k` the absolute (shifted) index.
pub fn modulated_sum(sample: &FieldSample, lambda: &Frequency) -> Result<Complex64> {
    let dims = sample.dims();
    Error::check_dim(dims.dim(), lambda.dim())?;
    let phases = axis_phases(sample, lambda);
    let strides = dims.strides();
    let terms: Vec<Complex64> = sample
        .values()
        .iter()
        .enumerate()
        .map(|(offset, x)| {
            let mut phase = Complex64::new(1.0, 0.0);
            for (axis, axis_phase) in phases.iter().enumerate() {
                phase *= axis_phase[(offset / strides[axis]) % dims.sides()[axis]];
            }
            phase * x
        })
        .collect();
    Ok(sum::pairwise(&terms))
}

/// `I = |S|² / V`.
pub fn periodogram(sample: &FieldSample, lambda: &Frequency) -> Result<f64> {
    let s = modulated_sum(sample, lambda)?;
    Ok(s.norm_sqr() / sample.dims().volume() as f64)
}

/// One entry of [`periodogram_vector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub sum: Complex64,
    pub periodogram: f64,
}

/// `(S, I)` at each frequency, in order.
pub fn periodogram_vector(sample: &FieldSample, freqs: &[Frequency]) -> Result<Vec<SpectralPoint>> {
    let volume = sample.dims().volume() as f64;
    freqs
        .iter()
        .map(|lambda| {
            let s = modulated_sum(sample, lambda)?;
            Ok(SpectralPoint { sum: s, periodogram: s.norm_sqr() / volume })
        })
        .collect()
}
