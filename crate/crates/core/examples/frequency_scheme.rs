//! Separated frequencies around an admissible base, and the separation check.

use std::f64::consts::FRAC_PI_2;

use specfield::frequencies::{check_separation, delta_for_fourier_gap, SchemeConfig};
use specfield::spectral::covariance_of_sums;
use specfield::{BoxDims, Frequency, InnovationKind, LinearFieldSpec};

fn main() -> specfield::Result<()> {
    let dims_seq: Vec<BoxDims> = [16, 32, 64].iter().map(|&v| BoxDims::new(vec![v, v])).collect::<Result<_, _>>()?;
    let config = SchemeConfig { base: Frequency::new(vec![FRAC_PI_2, -1.5])?, m: 3, delta: 0.25, axis: 1 };
    let scheme = config.scheme(&dims_seq)?;
    for (level, dist) in scheme.levels.iter().zip(scheme.distance_to_base()) {
        let coords: Vec<_> = level.freqs.iter().map(|f| f.coords()[1]).collect();
        println!("{}: second coordinates {coords:.4?}, distance to base {dist:.4}", level.dims);
    }
    println!("separated: {:?}", check_separation(&scheme, &config.separation())?);

    // δ that lands the neighbours exactly two Fourier steps apart at v = 32
    let delta = delta_for_fourier_gap(32, 2)?;
    let grid = SchemeConfig { delta, ..config.clone() };
    let dims = BoxDims::new(vec![32, 32])?;
    let freqs = grid.frequencies(&dims)?;
    let spec = LinearFieldSpec::iid(2, InnovationKind::CircularComplexGaussian, 1.0)?;
    let c = covariance_of_sums(&spec, &freqs[0], &freqs[1], &dims)?;
    println!("delta = {delta:.5}: E[S1 conj S2]/V = {:.2e}", c.norm());
    Ok(())
}
