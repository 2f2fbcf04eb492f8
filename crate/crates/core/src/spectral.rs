//! Second moments of demodulated box sums.
//!
//! `E I = Σ_{|h_s|<v_s} Π_s (1 - |h_s|/v_s) r(h) e^{-ih·λ}` is evaluated in the
//! lag domain, and independently as the torus integral
//! `∫ Π_s K(θ_s, v_s) f(θ + λ) dm(θ)` by a tensor trapezoid rule. Cross
//! moments `E[S^λ conj(S^μ)] / V` and `E[S^λ S^μ] / V` group the double sum
//! over the box by lag, which leaves one geometric sum per axis.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldgen::LinearFieldSpec;
use crate::kernels::fejer;
use crate::periodogram::{BoxDims, Frequency};
use crate::sum;

/// Imaginary residual above which the lag sum is reported as inconsistent.
const IMAG_TOL: f64 = 1e-8;

fn check_dims(spec: &LinearFieldSpec, lambda: &Frequency, dims: &BoxDims) -> Result<()> {
    Error::check_dim(spec.dim(), lambda.dim())?;
    Error::check_dim(spec.dim(), dims.dim())
}

/// `E I_n^λ = E|S|² / V`, exactly.
pub fn expected_periodogram_exact(spec: &LinearFieldSpec, lambda: &Frequency, dims: &BoxDims) -> Result<f64> {
    check_dims(spec, lambda, dims)?;
    let terms: Vec<Complex64> = spec
        .covariance_lags()
        .into_iter()
        .filter_map(|(h, r)| {
            let mut weight = 1.0;
            let mut phase = 0.0;
            for ((&hs, &vs), &ls) in h.iter().zip(dims.sides()).zip(lambda.coords()) {
                let gap = hs.unsigned_abs() as f64;
                if gap >= vs as f64 {
                    return None;
                }
                weight *= 1.0 - gap / vs as f64;
                phase += hs as f64 * ls;
            }
            Some(r * Complex64::from_polar(weight, -phase))
        })
        .collect();
    let total = sum::pairwise(&terms);
    if total.im.abs() >= IMAG_TOL {
        return Err(Error::Consistency(format!(
            "expected periodogram has imaginary residual {:e}",
            total.im
        )));
    }
    Ok(total.re)
}

/// Fejér-smoothed density `∫ Π_s K(θ_s, v_s) density(θ + λ) dm(θ)` on a
/// uniform `grid_points_per_dim^d` torus grid.
pub fn fejer_smoothed<F>(density: F, lambda: &Frequency, dims: &BoxDims, grid_points_per_dim: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    Error::check_dim(dims.dim(), lambda.dim())?;
    let max_side = dims.sides().iter().copied().max().unwrap_or(1);
    if grid_points_per_dim < 4 * max_side {
        return Err(Error::invalid(format!(
            "quadrature grid of {grid_points_per_dim} points per axis is too coarse; need at least {}",
            4 * max_side
        )));
    }
    let d = dims.dim();
    let n = grid_points_per_dim;
    let total = n
        .checked_pow(d as u32)
        .filter(|t| *t <= 1 << 28)
        .ok_or_else(|| Error::invalid("quadrature grid is too large"))?;
    let nodes: Vec<f64> = (0..n).map(|i| -PI + TAU * i as f64 / n as f64).collect();
    let kernel: Vec<Vec<f64>> = dims
        .sides()
        .iter()
        .map(|&v| nodes.iter().map(|&t| fejer(t, v as u64)).collect())
        .collect();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let mut weight = 1.0;
            let mut point = vec![0.0; d];
            for s in (0..d).rev() {
                let i = rest % n;
                rest /= n;
                weight *= kernel[s][i];
                point[s] = nodes[i] + lambda.coords()[s];
            }
            if weight == 0.0 {
                0.0
            } else {
                weight * density(&point)
            }
        })
        .collect();
    Ok(sum::pairwise_real(&values) / total as f64)
}

/// `E I_n^λ` by quadrature of the Fejér-kernel integral.
pub fn expected_periodogram_quadrature(
    spec: &LinearFieldSpec,
    lambda: &Frequency,
    dims: &BoxDims,
    grid_points_per_dim: usize,
) -> Result<f64> {
    check_dims(spec, lambda, dims)?;
    fejer_smoothed(|theta| spec.density_at(theta), lambda, dims, grid_points_per_dim)
}

/// `(1/V) Σ_h c(h) e^{-ih·λ} Π_s Σ_{k_s} e^{-ik_s ω_s}`, the inner sum over
/// `k_s` with both `k_s` and `k_s + h_s` in `[1, v_s]`.
fn lag_grouped(lags: &BTreeMap<Vec<i64>, Complex64>, lambda: &[f64], omega: &[f64], dims: &BoxDims) -> Complex64 {
    let mut axis_cache: HashMap<(usize, i64), Complex64> = HashMap::new();
    let mut terms = Vec::with_capacity(lags.len());
    'lags: for (h, c) in lags {
        let mut factor = *c;
        let mut phase = 0.0;
        for (s, &hs) in h.iter().enumerate() {
            let v = dims.sides()[s] as i64;
            if hs.abs() >= v {
                continue 'lags;
            }
            let axis_sum = *axis_cache.entry((s, hs)).or_insert_with(|| {
                let lo = 1.max(1 - hs);
                let hi = v.min(v - hs);
                let parts: Vec<Complex64> =
                    (lo..=hi).map(|k| Complex64::from_polar(1.0, -(k as f64) * omega[s])).collect();
                sum::pairwise(&parts)
            });
            factor *= axis_sum;
            phase += hs as f64 * lambda[s];
        }
        terms.push(factor * Complex64::from_polar(1.0, -phase));
    }
    sum::pairwise(&terms) / dims.volume() as f64
}

/// `E[S^λ conj(S^μ)] / V` over the unshifted box.
pub fn covariance_of_sums(
    spec: &LinearFieldSpec,
    lambda: &Frequency,
    mu: &Frequency,
    dims: &BoxDims,
) -> Result<Complex64> {
    check_dims(spec, lambda, dims)?;
    Error::check_dim(spec.dim(), mu.dim())?;
    let omega: Vec<f64> = lambda.coords().iter().zip(mu.coords()).map(|(l, m)| l - m).collect();
    Ok(lag_grouped(&spec.covariance_lags(), lambda.coords(), &omega, dims))
}

/// `E[S^λ S^μ] / V` (no conjugate); identically zero for circular fields.
pub fn product_of_sums(spec: &LinearFieldSpec, lambda: &Frequency, mu: &Frequency, dims: &BoxDims) -> Result<Complex64> {
    check_dims(spec, lambda, dims)?;
    Error::check_dim(spec.dim(), mu.dim())?;
    let omega: Vec<f64> = lambda.coords().iter().zip(mu.coords()).map(|(l, m)| l + m).collect();
    Ok(lag_grouped(&spec.pseudo_covariance_lags(), lambda.coords(), &omega, dims))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationRow {
    pub n: usize,
    pub dims: BoxDims,
    pub sup_err: f64,
}

/// `sup_λ |E I_n^λ - f(λ)|` over a frequency grid, one row per box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub grid_size: usize,
    pub rows: Vec<ExpectationRow>,
}

impl ExpectationReport {
    /// CSV with columns `n,v,sup_err`; `v` is written as `v1xv2x...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,v,sup_err\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{:e}\n", row.n, row.dims, row.sup_err));
        }
        out
    }
}

/// Frequencies `-π + 2π(i+1)/size`, `i = 0..size`, which lie in `(-π, π]`.
pub fn frequency_grid(size: usize) -> Vec<f64> {
    (0..size).map(|i| -PI + TAU * (i + 1) as f64 / size as f64).collect()
}

pub fn uniform_convergence_report(
    spec: &LinearFieldSpec,
    dims_sequence: &[BoxDims],
    lambda_grid_size: usize,
) -> Result<ExpectationReport> {
    if lambda_grid_size == 0 {
        return Err(Error::invalid("frequency grid must be non-empty"));
    }
    let d = spec.dim();
    let axis = frequency_grid(lambda_grid_size);
    let points = lambda_grid_size
        .checked_pow(d as u32)
        .filter(|p| *p <= 1 << 24)
        .ok_or_else(|| Error::invalid("frequency grid is too large"))?;
    let grid: Vec<Frequency> = (0..points)
        .map(|idx| {
            let mut rest = idx;
            let mut coords = vec![0.0; d];
            for c in coords.iter_mut().rev() {
                *c = axis[rest % lambda_grid_size];
                rest /= lambda_grid_size;
            }
            Frequency::new(coords)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(dims_sequence.len());
    for (i, dims) in dims_sequence.iter().enumerate() {
        Error::check_dim(d, dims.dim())?;
        let errs: Vec<f64> = grid
            .par_iter()
            .map(|lambda| Ok((expected_periodogram_exact(spec, lambda, dims)? - spec.density_at(lambda.coords())).abs()))
            .collect::<Result<_>>()?;
        let sup_err = errs.into_iter().fold(0.0, f64::max);
        rows.push(ExpectationRow { n: i + 1, dims: dims.clone(), sup_err });
    }
    Ok(ExpectationReport { grid_size: lambda_grid_size, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::{InnovationKind, Tap};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn freq(c: &[f64]) -> Frequency {
        Frequency::new(c.to_vec()).unwrap()
    }

    fn ma1() -> LinearFieldSpec {
        LinearFieldSpec::moving_average_1(1, 0, 1.0, InnovationKind::RealGaussian, 1.0).unwrap()
    }

    /// Oracle: the `O(V²)` double sum over the box.
    fn brute_force(spec: &LinearFieldSpec, lambda: &[f64], mu: &[f64], dims: &BoxDims, conjugate: bool) -> Complex64 {
        let sample = crate::fieldgen::FieldSample::from_fn(dims.clone(), vec![0; dims.dim()], |_| Complex64::default()).unwrap();
        let idx: Vec<Vec<i64>> = (0..dims.volume()).map(|o| sample.index_of(o)).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for j in &idx {
            for k in &idx {
                let h: Vec<i64> = j.iter().zip(k).map(|(a, b)| a - b).collect();
                let dot_l: f64 = j.iter().zip(lambda).map(|(a, b)| *a as f64 * b).sum();
                let dot_m: f64 = k.iter().zip(mu).map(|(a, b)| *a as f64 * b).sum();
                total += if conjugate {
                    spec.autocovariance(&h).unwrap() * Complex64::from_polar(1.0, -dot_l + dot_m)
                } else {
                    spec.pseudo_autocovariance(&h).unwrap() * Complex64::from_polar(1.0, -dot_l - dot_m)
                };
            }
        }
        total / dims.volume() as f64
    }

    #[test]
    fn iid_expectation_is_variance() {
        let spec = LinearFieldSpec::iid(2, InnovationKind::CircularComplexGaussian, 1.3).unwrap();
        for (l, v) in [([0.4, -1.0], vec![3, 7]), ([PI, 0.0], vec![1, 1])] {
            let dims = BoxDims::new(v).unwrap();
            assert_abs_diff_eq!(expected_periodogram_exact(&spec, &freq(&l), &dims).unwrap(), 1.69, epsilon = 1e-14);
            let q = expected_periodogram_quadrature(&spec, &freq(&l), &dims, 32).unwrap();
            assert_abs_diff_eq!(q, 1.69, epsilon = 1e-6);
        }
    }

    #[test]
    fn ma1_small_box() {
        let dims = BoxDims::new(vec![2]).unwrap();
        assert_abs_diff_eq!(expected_periodogram_exact(&ma1(), &freq(&[0.0]), &dims).unwrap(), 3.0, epsilon = 1e-14);
        let brute = brute_force(&ma1(), &[0.0], &[0.0], &dims, true);
        assert_abs_diff_eq!(brute.re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn quadrature_rejects_coarse_grid() {
        let dims = BoxDims::new(vec![8]).unwrap();
        assert!(expected_periodogram_quadrature(&ma1(), &freq(&[0.1]), &dims, 31).is_err());
        assert!(expected_periodogram_quadrature(&ma1(), &freq(&[0.1]), &dims, 32).is_ok());
    }

    #[test]
    fn quadrature_is_linear_in_density() {
        let spec = ma1();
        let dims = BoxDims::new(vec![9]).unwrap();
        let l = freq(&[1.1]);
        let base = fejer_smoothed(|t| spec.density_at(t), &l, &dims, 40).unwrap();
        let shifted = fejer_smoothed(|t| spec.density_at(t) + 2.5, &l, &dims, 40).unwrap();
        assert_abs_diff_eq!(shifted, base + 2.5, epsilon = 1e-8);
    }

    #[test]
    fn covariance_and_product_match_brute_force() {
        let spec = LinearFieldSpec::new(
            2,
            vec![Tap::real(vec![0, 0], 1.0), Tap::real(vec![1, 0], 0.6), Tap::real(vec![0, -1], -0.4)],
            InnovationKind::RealGaussian,
            1.2,
        )
        .unwrap();
        let dims = BoxDims::new(vec![4, 3]).unwrap();
        let (l, m) = ([0.7, -2.0], [1.9, 0.3]);
        let c = covariance_of_sums(&spec, &freq(&l), &freq(&m), &dims).unwrap();
        let p = product_of_sums(&spec, &freq(&l), &freq(&m), &dims).unwrap();
        let cb = brute_force(&spec, &l, &m, &dims, true);
        let pb = brute_force(&spec, &l, &m, &dims, false);
        assert_abs_diff_eq!((c - cb).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((p - pb).norm(), 0.0, epsilon = 1e-12);
        let same = covariance_of_sums(&spec, &freq(&l), &freq(&l), &dims).unwrap();
        assert_abs_diff_eq!(same.re, expected_periodogram_exact(&spec, &freq(&l), &dims).unwrap(), epsilon = 1e-12);
        assert!(same.im.abs() < 1e-12);
    }

    #[test]
    fn iid_fourier_grid_orthogonality() {
        let spec = LinearFieldSpec::iid(2, InnovationKind::CircularComplexGaussian, 1.0).unwrap();
        let dims = BoxDims::new(vec![4, 4]).unwrap();
        let l = [0.3, -0.8];
        let m = [0.3 - TAU / 4.0, -0.8 + 2.0 * TAU / 4.0];
        let c = covariance_of_sums(&spec, &freq(&l), &freq(&m), &dims).unwrap();
        assert!(c.norm() < 1e-14);
        assert!(brute_force(&spec, &l, &m, &dims, true).norm() < 1e-14);
    }

    #[test]
    fn circular_product_vanishes() {
        let spec = LinearFieldSpec::moving_average_1(1, 0, 1.0, InnovationKind::CircularComplexGaussian, 1.0).unwrap();
        let dims = BoxDims::new(vec![10]).unwrap();
        assert_eq!(product_of_sums(&spec, &freq(&[0.2]), &freq(&[0.2]), &dims).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn real_product_decays() {
        let spec = LinearFieldSpec::iid(1, InnovationKind::RealGaussian, 1.0).unwrap();
        let l = freq(&[FRAC_PI_2]);
        let tiny = BoxDims::new(vec![2]).unwrap();
        let p = product_of_sums(&spec, &l, &l, &tiny).unwrap();
        let pb = brute_force(&spec, &[FRAC_PI_2], &[FRAC_PI_2], &tiny, false);
        assert_abs_diff_eq!((p - pb).norm(), 0.0, epsilon = 1e-14);
        let at = |v: usize| product_of_sums(&ma1(), &l, &l, &BoxDims::new(vec![v]).unwrap()).unwrap().norm();
        assert!(at(64) < 0.5 * at(16));
    }

    #[test]
    fn report_examples() {
        let iid = LinearFieldSpec::iid(1, InnovationKind::RealGaussian, 1.0).unwrap();
        let seq: Vec<BoxDims> = [8, 64].iter().map(|&v| BoxDims::new(vec![v]).unwrap()).collect();
        let rep = uniform_convergence_report(&iid, &seq, 64).unwrap();
        assert!(rep.rows.iter().all(|r| r.sup_err < 1e-10));
        // grid contains π, where the MA(1) density vanishes
        let rep = uniform_convergence_report(&ma1(), &seq, 64).unwrap();
        assert!(rep.rows[1].sup_err < rep.rows[0].sup_err);
        assert!(rep.rows.iter().all(|r| r.sup_err.is_finite()));
        assert_abs_diff_eq!(rep.rows[0].sup_err, 2.0 / 8.0, epsilon = 1e-12);
        let csv = rep.to_csv();
        assert!(csv.starts_with("n,v,sup_err\n1,8,"));
    }

    proptest! {
        #[test]
        fn hermitian_symmetry(l in -3.0f64..3.0, m in -3.0f64..3.0, v in 1usize..20) {
            let spec = LinearFieldSpec::new(
                1,
                vec![Tap::new(vec![0], 1.0, 0.3), Tap::new(vec![2], -0.5, 0.8)],
                InnovationKind::CircularComplexGaussian,
                1.0,
            ).unwrap();
            let dims = BoxDims::new(vec![v]).unwrap();
            let a = covariance_of_sums(&spec, &freq(&[l]), &freq(&[m]), &dims).unwrap();
            let b = covariance_of_sums(&spec, &freq(&[m]), &freq(&[l]), &dims).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-10);
            let diag = covariance_of_sums(&spec, &freq(&[l]), &freq(&[l]), &dims).unwrap();
            prop_assert!(diag.im.abs() < 1e-10 && diag.re > -1e-10);
        }

        #[test]
        fn exact_matches_quadrature(a1 in -1.0f64..1.0, a2 in -1.0f64..1.0, l in -3.0f64..3.0, v in 1usize..24) {
            let spec = LinearFieldSpec::new(
                1,
                vec![Tap::real(vec![0], 1.0), Tap::real(vec![1], a1), Tap::real(vec![-1], a2)],
                InnovationKind::RealGaussian,
                1.0,
            ).unwrap();
            let dims = BoxDims::new(vec![v]).unwrap();
            let exact = expected_periodogram_exact(&spec, &freq(&[l]), &dims).unwrap();
            let quad = expected_periodogram_quadrature(&spec, &freq(&[l]), &dims, 4 * v).unwrap();
            prop_assert!((exact - quad).abs() < 1e-6);
        }
    }
}
