//! Fejér and modulated Dirichlet kernels near and away from the singular point.
//!
//! ```bash
//! cargo run -p specfield --example kernels
//! ```

use specfield::kernels::{dirichlet_mod, fejer};

fn main() {
    let n = 16;
    println!("{:>10} {:>14} {:>14} {:>14}", "alpha", "K(alpha,n)", "|D|^2", "arg D");
    for alpha in [0.0, 1e-9, 1e-3, 0.1, 0.5, 1.0, std::f64::consts::PI] {
        let d = dirichlet_mod(alpha, n);
        println!("{alpha:>10.3e} {:>14.8} {:>14.8} {:>14.8}", fejer(alpha, n), d.norm_sqr(), d.arg());
    }

    // K integrates to 2π over the circle
    let grid = 4096;
    let mean: f64 = (0..grid)
        .map(|i| fejer(-std::f64::consts::PI + std::f64::consts::TAU * (i as f64 + 0.5) / grid as f64, n))
        .sum::<f64>()
        / grid as f64;
    println!("(1/2π)∫K = {mean:.12}");
}
