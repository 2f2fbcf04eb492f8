//! Periodograms of stationary random fields indexed by `Z^d`.
//!
//! Tools for checking numerically how box periodograms of weakly dependent
//! Gaussian fields behave as the box grows:
//!
//! * [`kernels`]: Fejér and modulated Dirichlet kernels.
//! * [`fieldgen`]: finite moving-average Gaussian fields with exact
//!   autocovariance and spectral density, generated from a counter-based RNG.
//! * [`periodogram`]: demodulated box sums and periodograms.
//! * [`spectral`]: exact and quadrature expectations, covariance of sums.
//! * [`frequencies`]: admissible frequencies and separated frequency schemes.
//! * [`blocking`]: Bernstein blocking plans, truncation and negligibility.
//! * [`mixing`]: canonical-correlation lower bounds on maximal correlation.
//! * [`stats`]: Monte Carlo harness (CLT, Miller functional, KS tests).
//! * [`cli`]: the `specfield` command line front end.

pub mod blocking;
pub mod cli;
pub mod error;
pub mod fieldgen;
pub mod frequencies;
pub mod kernels;
pub mod mixing;
pub mod periodogram;
pub mod rng;
pub mod spectral;
pub mod stats;

mod sum;

pub use error::{Error, Result};
pub use fieldgen::{FieldSample, InnovationKind, LinearFieldSpec, Tap};
pub use periodogram::{BoxDims, Frequency};

pub use num_complex::Complex64;
