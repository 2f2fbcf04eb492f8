//! Fejér kernel `K(α, n) = sin²(nα/2) / (n sin²(α/2))` and the modulated
//! Dirichlet kernel `D(α, n) = n^{-1/2} (1 - e^{-inα}) / (1 - e^{-iα})`.
//!
//! Both kernels are `2π`-periodic with a removable singularity at
//! `α ≡ 0 (mod 2π)`, where they take the limits `n` and `√n`; the two are
//! tied by `|D(α, n)|² = K(α, n)`. Away from the origin the Fejér kernel obeys
//! `K(α, n) ≤ π² / (n α²)` for `0 < |α| ≤ π`, from `sin(x) ≥ 2x/π` on `[0, π/2]`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodogram::BoxDims;

/// Below this `|1 - e^{-iα}|` the analytic limit is returned.
const SINGULAR_TOL: f64 = 1e-12;
/// Below this `|α|` the half-angle sine uses its cubic Taylor polynomial.
const SERIES_TOL: f64 = 1e-6;

/// A kernel evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelArg {
    pub alpha: f64,
    pub n: u64,
}

impl KernelArg {
    pub fn new(alpha: f64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("kernel order n must be at least 1"));
        }
        if !alpha.is_finite() {
            return Err(Error::invalid(format!("kernel angle must be finite, got {alpha}")));
        }
        Ok(KernelArg { alpha, n })
    }

    pub fn fejer(&self) -> f64 {
        fejer(self.alpha, self.n)
    }

    pub fn dirichlet_mod(&self) -> Complex64 {
        dirichlet_mod(self.alpha, self.n)
    }
}

/// Representative of `alpha` in `(-π, π]`.
fn reduce(alpha: f64) -> f64 {
    let r = (alpha + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

fn half_angle_sine(alpha: f64) -> f64 {
    let x = 0.5 * alpha;
    if alpha.abs() < SERIES_TOL {
        x - x * x * x / 6.0
    } else {
        x.sin()
    }
}

/// `sin(nα/2) / sin(α/2)` on the reduced angle, or `None` at the singularity.
fn sine_ratio(reduced: f64, n: u64) -> Option<f64> {
    let denom = half_angle_sine(reduced);
    if 2.0 * denom.abs() < SINGULAR_TOL {
        return None;
    }
    let numer = (0.5 * n as f64 * reduced).sin();
    Some(numer / denom)
}

/// Fejér kernel `K(α, n)`. Panics if `n == 0`.
pub fn fejer(alpha: f64, n: u64) -> f64 {
    assert!(n >= 1, "Fejér kernel order must be positive");
    // even in α; reducing |α| keeps K(-α) = K(α) bit for bit
    let reduced = reduce(alpha.abs());
    match sine_ratio(reduced, n) {
        Some(ratio) => ratio * ratio / n as f64,
        None => n as f64,
    }
}

/// Modulated Dirichlet kernel `D(α, n)`. Panics if `n == 0`.
///
/// Evaluated as `e^{-i(n-1)α/2} sin(nα/2) / (√n sin(α/2))`.
pub fn dirichlet_mod(alpha: f64, n: u64) -> Complex64 {
    assert!(n >= 1, "Dirichlet kernel order must be positive");
    let reduced = reduce(alpha);
    let scale = (n as f64).sqrt();
    match sine_ratio(reduced, n) {
        Some(ratio) => {
            let phase = Complex64::from_polar(1.0, -0.5 * (n as f64 - 1.0) * reduced);
            phase * (ratio / scale)
        }
        None => Complex64::new(scale, 0.0),
    }
}

/// `Π_s K(θ_s, v_s)`.
pub fn fejer_product(theta: &[f64], dims: &BoxDims) -> Result<f64> {
    Error::check_dim(dims.dim(), theta.len())?;
    Ok(theta
        .iter()
        .zip(dims.sides())
        .map(|(&t, &v)| fejer(t, v as u64))
        .product())
}
