//! Exact expected periodogram, its Fejér-smoothed quadrature, and the uniform
//! bias table `sup_λ |E I - f|` along growing boxes.

use specfield::spectral::{expected_periodogram_exact, expected_periodogram_quadrature, uniform_convergence_report};
use specfield::{BoxDims, Frequency, InnovationKind, LinearFieldSpec};

fn main() -> specfield::Result<()> {
    let spec = LinearFieldSpec::moving_average_1(1, 0, 1.0, InnovationKind::RealGaussian, 1.0)?;
    let lambda = Frequency::new(vec![1.0])?;
    let dims = BoxDims::new(vec![16])?;
    let exact = expected_periodogram_exact(&spec, &lambda, &dims)?;
    let quad = expected_periodogram_quadrature(&spec, &lambda, &dims, 256)?;
    println!("E I at lambda = 1, v = 16: exact {exact:.12}, quadrature {quad:.12}, f = {:.12}", spec.density_at(&[1.0]));

    let seq: Vec<BoxDims> = [8, 16, 32, 64, 128].iter().map(|&v| BoxDims::new(vec![v])).collect::<Result<_, _>>()?;
    print!("{}", uniform_convergence_report(&spec, &seq, 128)?.to_csv());
    Ok(())
}
