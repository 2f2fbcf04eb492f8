//! Finite moving-average Gaussian fields on `Z^d`.
//!
//! `X_k = Σ_j a_j ε_{k-j}` with i.i.d. Gaussian innovations `ε`, either real
//! `N(0, σ²)` or circularly-symmetric complex with `E|ε|² = σ²`. Such a field
//! is strictly stationary and centered, values more than the tap extent apart
//! in any coordinate are independent, and
//!
//! * `r(h) = E X_h conj(X_0) = σ² Σ_t a_t conj(a_{t-h})`,
//! * `f(λ) = σ² |Σ_j a_j e^{-ij·λ}|²`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodogram::{BoxDims, Frequency};
use crate::rng::RowStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnovationKind {
    RealGaussian,
    CircularComplexGaussian,
}

/// One filter coefficient `a_lag = re + i·im`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub lag: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Tap {
    pub fn new(lag: Vec<i64>, re: f64, im: f64) -> Self {
        Tap { lag, re, im }
    }

    pub fn real(lag: Vec<i64>, re: f64) -> Self {
        Tap { lag, re, im: 0.0 }
    }

    pub fn coefficient(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Deserialize)]
struct RawSpec {
    dim: usize,
    taps: Vec<Tap>,
    innovation_kind: InnovationKind,
    innovation_std: f64,
}

/// A validated moving-average field description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct LinearFieldSpec {
    dim: usize,
    taps: Vec<Tap>,
    innovation_kind: InnovationKind,
    innovation_std: f64,
}

impl TryFrom<RawSpec> for LinearFieldSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        LinearFieldSpec::new(raw.dim, raw.taps, raw.innovation_kind, raw.innovation_std)
    }
}

impl LinearFieldSpec {
    pub fn new(dim: usize, taps: Vec<Tap>, innovation_kind: InnovationKind, innovation_std: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("field dimension must be positive"));
        }
        if taps.is_empty() {
            return Err(Error::invalid("a field needs at least one tap"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for tap in &taps {
            Error::check_dim(dim, tap.lag.len())?;
            if !tap.re.is_finite() || !tap.im.is_finite() {
                return Err(Error::invalid(format!("tap at lag {:?} is not finite", tap.lag)));
            }
            if innovation_kind == InnovationKind::RealGaussian && tap.im != 0.0 {
                return Err(Error::invalid(format!(
                    "real-gaussian fields need real taps; lag {:?} has im = {}",
                    tap.lag, tap.im
                )));
            }
            if tap.lag.iter().any(|c| c.unsigned_abs() > (1 << 40)) {
                return Err(Error::IndexOverflow(format!("tap lag {:?} is too large", tap.lag)));
            }
            if !seen.insert(tap.lag.clone()) {
                return Err(Error::invalid(format!("duplicate tap lag {:?}", tap.lag)));
            }
        }
        if !(innovation_std >= 0.0 && innovation_std.is_finite()) {
            return Err(Error::invalid(format!("innovation_std must be finite and >= 0, got {innovation_std}")));
        }
        Ok(LinearFieldSpec { dim, taps, innovation_kind, innovation_std })
    }

    /// Independent innovations: a single unit tap at the origin.
    pub fn iid(dim: usize, kind: InnovationKind, std: f64) -> Result<Self> {
        Self::new(dim, vec![Tap::real(vec![0; dim], 1.0)], kind, std)
    }

    /// `X_k = c (ε_k + ε_{k-e_axis})` with real coefficient `c`.
    pub fn moving_average_1(dim: usize, axis: usize, coefficient: f64, kind: InnovationKind, std: f64) -> Result<Self> {
        if axis >= dim {
            return Err(Error::invalid(format!("axis {axis} out of range for dimension {dim}")));
        }
        let mut unit = vec![0; dim];
        unit[axis] = 1;
        Self::new(dim, vec![Tap::real(vec![0; dim], coefficient), Tap::real(unit, coefficient)], kind, std)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn innovation_kind(&self) -> InnovationKind {
        self.innovation_kind
    }

    pub fn innovation_std(&self) -> f64 {
        self.innovation_std
    }

    pub fn is_real(&self) -> bool {
        self.innovation_kind == InnovationKind::RealGaussian
    }

    /// Same field with innovation standard deviation multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.dim, self.taps.clone(), self.innovation_kind, self.innovation_std * c)
    }

    /// `max |lag_s|` over taps and coordinates.
    pub fn support_radius(&self) -> u64 {
        self.taps.iter().flat_map(|t| t.lag.iter().map(|c| c.unsigned_abs())).max().unwrap_or(0)
    }

    /// Per-axis `(min lag, max lag)`.
    pub fn lag_bounds(&self) -> Vec<(i64, i64)> {
        (0..self.dim)
            .map(|s| {
                let lo = self.taps.iter().map(|t| t.lag[s]).min().unwrap_or(0);
                let hi = self.taps.iter().map(|t| t.lag[s]).max().unwrap_or(0);
                (lo, hi)
            })
            .collect()
    }

    /// Per-axis tap extent `max lag_s - min lag_s`; `r(h) = 0` once any
    /// `|h_s|` exceeds it.
    pub fn axis_extent(&self) -> Vec<u64> {
        self.lag_bounds().iter().map(|(lo, hi)| (hi - lo) as u64).collect()
    }

    /// Smallest `m` such that index sets separated by more than `m` in some
    /// coordinate are independent.
    pub fn dependence_range(&self) -> u64 {
        self.axis_extent().into_iter().max().unwrap_or(0)
    }

    fn sigma2(&self) -> f64 {
        self.innovation_std * self.innovation_std
    }

    /// `r(0) = E|X_0|²`.
    pub fn variance(&self) -> f64 {
        self.sigma2() * self.taps.iter().map(|t| t.coefficient().norm_sqr()).sum::<f64>()
    }

    /// All nonzero-candidate lags of `r`, with their values.
    pub fn covariance_lags(&self) -> BTreeMap<Vec<i64>, Complex64> {
        self.lag_table(|a, b| a * b.conj())
    }

    /// All lags of the pseudo-covariance `p(h) = E X_h X_0`; empty for
    /// circular innovations.
    pub fn pseudo_covariance_lags(&self) -> BTreeMap<Vec<i64>, Complex64> {
        match self.innovation_kind {
            InnovationKind::RealGaussian => self.lag_table(|a, b| a * b),
            InnovationKind::CircularComplexGaussian => BTreeMap::new(),
        }
    }

    fn lag_table(&self, combine: impl Fn(Complex64, Complex64) -> Complex64) -> BTreeMap<Vec<i64>, Complex64> {
        let sigma2 = self.sigma2();
        let mut table = BTreeMap::new();
        for t in &self.taps {
            for u in &self.taps {
                // term a_t · a_{t-h} with u = t - h
                let h: Vec<i64> = t.lag.iter().zip(&u.lag).map(|(a, b)| a - b).collect();
                *table.entry(h).or_insert(Complex64::new(0.0, 0.0)) +=
                    combine(t.coefficient(), u.coefficient()) * sigma2;
            }
        }
        table
    }

    /// `r(h) = E X_h conj(X_0)`.
    pub fn autocovariance(&self, h: &[i64]) -> Result<Complex64> {
        Error::check_dim(self.dim, h.len())?;
        let sigma2 = self.sigma2();
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.taps {
            let shifted: Vec<i64> = t.lag.iter().zip(h).map(|(a, b)| a - b).collect();
            if let Some(u) = self.taps.iter().find(|u| u.lag == shifted) {
                acc += t.coefficient() * u.coefficient().conj() * sigma2;
            }
        }
        Ok(acc)
    }

    /// `p(h) = E X_h X_0`.
    pub fn pseudo_autocovariance(&self, h: &[i64]) -> Result<Complex64> {
        Error::check_dim(self.dim, h.len())?;
        if self.innovation_kind == InnovationKind::CircularComplexGaussian {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let r = self.autocovariance(h)?;
        // real taps and real innovations: p = r
        Ok(r)
    }

    /// Transfer function `Σ_j a_j e^{-ij·θ}` at an arbitrary point.
    pub fn transfer(&self, theta: &[f64]) -> Complex64 {
        self.taps
            .iter()
            .map(|t| {
                let phase: f64 = t.lag.iter().zip(theta).map(|(&j, &th)| j as f64 * th).sum();
                t.coefficient() * Complex64::from_polar(1.0, -phase)
            })
            .sum()
    }

    /// `f(θ)` at an arbitrary (not necessarily reduced) point of the torus.
    pub fn density_at(&self, theta: &[f64]) -> f64 {
        self.sigma2() * self.transfer(theta).norm_sqr()
    }

    /// Spectral density `f(λ) = σ² |Σ_j a_j e^{-ij·λ}|²`.
    pub fn spectral_density(&self, lambda: &Frequency) -> Result<f64> {
        Error::check_dim(self.dim, lambda.dim())?;
        Ok(self.density_at(lambda.coords()))
    }

    pub fn generate(&self, dims: &BoxDims, shift: &[i64], seed: u64) -> Result<FieldSample> {
        generate(self, dims, shift, seed)
    }
}

pub fn spectral_density(spec: &LinearFieldSpec, lambda: &Frequency) -> Result<f64> {
    spec.spectral_density(lambda)
}

pub fn autocovariance(spec: &LinearFieldSpec, h: &[i64]) -> Result<Complex64> {
    spec.autocovariance(h)
}

/// Field values on the shifted box `{k + w : 1 ≤ k_j ≤ v_j}`, row-major with
/// the last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    dims: BoxDims,
    shift: Vec<i64>,
    values: Vec<Complex64>,
    seed: Option<u64>,
}

impl FieldSample {
    pub fn new(dims: BoxDims, shift: Vec<i64>, values: Vec<Complex64>) -> Result<Self> {
        Error::check_dim(dims.dim(), shift.len())?;
        if values.len() != dims.volume() {
            return Err(Error::invalid(format!(
                "box {dims} holds {} values, got {}",
                dims.volume(),
                values.len()
            )));
        }
        Ok(FieldSample { dims, shift, values, seed: None })
    }

    /// Deterministic sample with `X_k = f(k)` at absolute indices `k`.
    pub fn from_fn(dims: BoxDims, shift: Vec<i64>, f: impl Fn(&[i64]) -> Complex64) -> Result<Self> {
        Error::check_dim(dims.dim(), shift.len())?;
        let mut values = Vec::with_capacity(dims.volume());
        let mut index = vec![0i64; dims.dim()];
        for offset in 0..dims.volume() {
            absolute_index(&dims, &shift, offset, &mut index);
            values.push(f(&index));
        }
        Ok(FieldSample { dims, shift, values, seed: None })
    }

    pub fn dims(&self) -> &BoxDims {
        &self.dims
    }

    pub fn shift(&self) -> &[i64] {
        &self.shift
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Absolute index of the value stored at `offset`.
    pub fn index_of(&self, offset: usize) -> Vec<i64> {
        let mut index = vec![0; self.dims.dim()];
        absolute_index(&self.dims, &self.shift, offset, &mut index);
        index
    }

    /// Value at absolute index `k`, if `k` lies in the box.
    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        if k.len() != self.dims.dim() {
            return None;
        }
        let strides = self.dims.strides();
        let mut offset = 0usize;
        for (s, (&kc, &w)) in k.iter().zip(&self.shift).enumerate() {
            let local = kc.checked_sub(w)?.checked_sub(1)?;
            if local < 0 || local as usize >= self.dims.sides()[s] {
                return None;
            }
            offset += local as usize * strides[s];
        }
        Some(self.values[offset])
    }
}

fn absolute_index(dims: &BoxDims, shift: &[i64], offset: usize, out: &mut [i64]) {
    let mut rest = offset;
    for s in (0..dims.dim()).rev() {
        let side = dims.sides()[s];
        out[s] = (rest % side) as i64 + 1 + shift[s];
        rest /= side;
    }
}

fn overflow(what: &str) -> Error {
    Error::IndexOverflow(format!("{what} overflows the index range"))
}

/// Draws the field on `𝔅_w(v)`. The innovation at absolute site `u` is a
/// pure function of `(seed, u)`, so overlapping boxes agree pointwise.
pub fn generate(spec: &LinearFieldSpec, dims: &BoxDims, shift: &[i64], seed: u64) -> Result<FieldSample> {
    let d = spec.dim();
    Error::check_dim(d, dims.dim())?;
    Error::check_dim(d, shift.len())?;
    let bounds = spec.lag_bounds();

    // Innovations are needed on [1 + w - hi, v + w - lo] along every axis.
    let mut lower = Vec::with_capacity(d);
    let mut ext_sides = Vec::with_capacity(d);
    for s in 0..d {
        let (lo, hi) = bounds[s];
        let side = i64::try_from(dims.sides()[s]).map_err(|_| overflow("box side"))?;
        let first = 1i64
            .checked_add(shift[s])
            .and_then(|x| x.checked_sub(hi))
            .ok_or_else(|| overflow("box corner"))?;
        side.checked_add(shift[s])
            .and_then(|x| x.checked_sub(lo))
            .ok_or_else(|| overflow("box corner"))?;
        lower.push(first);
        ext_sides.push(dims.sides()[s] + (hi - lo) as usize);
    }
    let ext = BoxDims::new(ext_sides)?;
    let ext_strides = ext.strides();
    let row_len = ext.sides()[d - 1];
    let rows = ext.volume() / row_len;

    let sigma = spec.innovation_std();
    let circular = spec.innovation_kind() == InnovationKind::CircularComplexGaussian;
    let mut innovations = Vec::with_capacity(ext.volume());
    let mut prefix = vec![0i64; d - 1];
    for row in 0..rows {
        let mut rest = row;
        for s in (0..d - 1).rev() {
            prefix[s] = lower[s] + (rest % ext.sides()[s]) as i64;
            rest /= ext.sides()[s];
        }
        let mut stream = RowStream::new(seed, &prefix, lower[d - 1])?;
        for _ in 0..row_len {
            let (z0, z1) = stream.next_pair();
            innovations.push(if circular {
                Complex64::new(z0, z1) * (sigma * std::f64::consts::FRAC_1_SQRT_2)
            } else {
                Complex64::new(sigma * z0, 0.0)
            });
        }
    }

    // X_k = Σ_j a_j ε_{k-j}; box position p maps to innovation position p + hi - j.
    let taps: Vec<(usize, Complex64)> = spec
        .taps()
        .iter()
        .map(|t| {
            let delta = (0..d).map(|s| (bounds[s].1 - t.lag[s]) as usize * ext_strides[s]).sum();
            (delta, t.coefficient())
        })
        .collect();
    let strides = dims.strides();
    let values = (0..dims.volume())
        .map(|offset| {
            let base: usize = (0..d).map(|s| ((offset / strides[s]) % dims.sides()[s]) * ext_strides[s]).sum();
            taps.iter().map(|(delta, a)| a * innovations[base + delta]).sum()
        })
        .collect();

    Ok(FieldSample { dims: dims.clone(), shift: shift.to_vec(), values, seed: Some(seed) })
}
