//! Bernstein blocking plans and the block/leftover partition of a box.

use specfield::blocking::{block_index_sets, plan, MixingProfile};
use specfield::BoxDims;

fn main() -> specfield::Result<()> {
    let slow = MixingProfile::new([(4, 0.25)].into_iter().collect(), None)?;
    let fast = MixingProfile::m_dependent(1);
    for (name, profile, v1) in [("rho'(4)=1/4", &slow, 100u64), ("1-dependent", &fast, 1000), ("1-dependent", &fast, 4096)] {
        let p = plan(v1, profile, 0.2)?;
        let sets = block_index_sets(&p, &BoxDims::new(vec![v1 as usize, 3])?)?;
        println!(
            "{name:>12} v1={v1:>5}: s={} p={} r={}  block card {}  leftover card {}  (v1-pr)^3 <= v1^2: {}",
            p.s,
            p.p,
            p.r,
            sets.block_cardinality(0),
            sets.leftover_cardinality(),
            p.leftover_within_two_thirds()
        );
    }
    Ok(())
}
