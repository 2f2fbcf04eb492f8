use num_complex::Complex64;

const LEAF: usize = 16;

/// Pairwise (tree) summation; rounding error grows like `O(log n)`.
pub(crate) fn pairwise(values: &[Complex64]) -> Complex64 {
    if values.len() <= LEAF {
        return values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

pub(crate) fn pairwise_real(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_real(&values[..mid]) + pairwise_real(&values[mid..])
}
