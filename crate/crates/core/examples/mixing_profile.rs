//! Canonical-correlation lower bounds on the mixing profile of a field, fed
//! straight into a blocking plan.

use specfield::blocking::plan;
use specfield::mixing::{canonical_rho, rho_prime_profile, IndexSetPair};
use specfield::{InnovationKind, LinearFieldSpec};

fn main() -> specfield::Result<()> {
    let spec = LinearFieldSpec::moving_average_1(1, 0, 1.0, InnovationKind::RealGaussian, 1.0)?;
    let pair = IndexSetPair::new(vec![vec![0]], vec![vec![1]], 0)?;
    println!("rho({{0}}, {{1}}) = {:.6}", canonical_rho(&spec, &pair)?.rho);

    let est = rho_prime_profile(&spec, 3, 2, 4)?;
    println!("{} pairs evaluated", est.pairs_evaluated);
    for (n, rho) in &est.values {
        let witness = est.witnesses.get(n).map(|w| format!("S={:?} T={:?}", w.s, w.t)).unwrap_or_default();
        println!("rho'({n}) >= {rho:.6}  {witness}");
    }
    let p = plan(512, &est.profile(), 0.2)?;
    println!("plan for v1 = 512: s={} p={} r={}", p.s, p.p, p.r);
    Ok(())
}
