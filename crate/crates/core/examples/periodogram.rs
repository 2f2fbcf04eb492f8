//! Periodograms at a few frequencies for one simulated field, next to the
//! spectral density they estimate.

use std::f64::consts::FRAC_PI_2;

use specfield::periodogram::periodogram_vector;
use specfield::{BoxDims, Frequency, InnovationKind, LinearFieldSpec};

fn main() -> specfield::Result<()> {
    let spec = LinearFieldSpec::moving_average_1(2, 0, 1.0, InnovationKind::RealGaussian, 1.0)?;
    let dims = BoxDims::new(vec![64, 64])?;
    let freqs = vec![
        Frequency::new(vec![0.3, 0.0])?,
        Frequency::new(vec![FRAC_PI_2, FRAC_PI_2])?,
        Frequency::new(vec![2.5, -1.0])?,
    ];
    // averaging over replications brings I close to f
    let reps = 200;
    let mut means = vec![0.0; freqs.len()];
    for seed in 0..reps {
        let sample = spec.generate(&dims, &[0, 0], seed)?;
        for (m, p) in means.iter_mut().zip(periodogram_vector(&sample, &freqs)?) {
            *m += p.periodogram / reps as f64;
        }
    }
    for (f, m) in freqs.iter().zip(&means) {
        println!("lambda {:?}: mean I = {m:.4}, f = {:.4}", f.coords(), spec.spectral_density(f)?);
    }
    Ok(())
}
