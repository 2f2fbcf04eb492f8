//! Leftover-slice and truncation-tail second moments shrink as the box grows.
//!
//! ```bash
//! cargo run -p specfield --release --example negligibility
//! ```

use specfield::blocking::negligibility_report;
use specfield::frequencies::SchemeConfig;
use specfield::stats::WeightVector;
use specfield::{BoxDims, Frequency, InnovationKind, LinearFieldSpec};

fn main() -> specfield::Result<()> {
    let spec = LinearFieldSpec::iid(1, InnovationKind::CircularComplexGaussian, 1.0)?;
    let scheme = SchemeConfig { base: Frequency::new(vec![1.0])?, m: 1, delta: 0.25, axis: 0 };
    let seq: Vec<BoxDims> = [64, 512, 4096].iter().map(|&v| BoxDims::new(vec![v])).collect::<Result<_, _>>()?;
    let report = negligibility_report(&spec, &scheme, &seq, 0.2, &WeightVector::ones(1)?, 1000, 3)?;
    for row in &report.rows {
        println!(
            "v1={:>5} s={:>2} p={:>2} r={:>4} card(Z)={:>4}  leftover {:.5} (exact {:.5})  tail {:.5} (exact {:.5})",
            row.dims.sides()[0],
            row.plan.s,
            row.plan.p,
            row.plan.r,
            row.leftover_cardinality,
            row.leftover_moment,
            row.leftover_exact_independent.unwrap_or(f64::NAN),
            row.tail_moment,
            row.tail_exact_independent.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
