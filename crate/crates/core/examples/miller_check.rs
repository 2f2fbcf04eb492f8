//! E[G(bv, S/√V)²] against ½ f ‖bv‖² along growing boxes.

use std::f64::consts::FRAC_PI_2;

use specfield::frequencies::SchemeConfig;
use specfield::stats::{miller_check, WeightVector};
use specfield::{BoxDims, Frequency, InnovationKind, LinearFieldSpec};

fn main() -> specfield::Result<()> {
    let spec = LinearFieldSpec::moving_average_1(1, 0, 1.0, InnovationKind::RealGaussian, 1.0)?;
    let scheme = SchemeConfig { base: Frequency::new(vec![FRAC_PI_2])?, m: 1, delta: 0.25, axis: 0 };
    let seq: Vec<BoxDims> = [8, 16, 32, 64].iter().map(|&v| BoxDims::new(vec![v])).collect::<Result<_, _>>()?;
    let report = miller_check(&spec, &scheme, &WeightVector::ones(1)?, &seq, 5000, 1)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "v", "target", "exact", "estimate", "se");
    for row in &report.rows {
        println!("{:>6} {:>10.5} {:>10.5} {:>10.5} {:>10.5}", row.dims.to_string(), row.target, row.exact, row.estimate, row.std_error);
    }
    Ok(())
}
