//! Counter-based random streams.
//!
//! Every Gaussian innovation is a pure function of `(seed, absolute index)`:
//! the ChaCha stream is selected from all coordinates but the last and the
//! word position from the last coordinate. A box of any shift can therefore
//! be regenerated pointwise, and replications can run in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// 32-bit words consumed per lattice site (two `u64` uniforms).
const WORDS_PER_SITE: u128 = 4;

/// Derives an independent 64-bit seed for sub-stream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Seed of replication `rep` at level `level` of a multi-level experiment.
pub fn replication_seed(master: u64, level: u64, rep: u64) -> u64 {
    derive_seed(derive_seed(master, level), rep)
}

/// Stream key for the leading coordinates of a lattice row.
fn stream_key(prefix: &[i64]) -> Result<u64> {
    if prefix.is_empty() {
        return Ok(0);
    }
    if prefix.len() > 64 {
        return Err(Error::IndexOverflow(format!(
            "cannot key a {}-dimensional lattice",
            prefix.len() + 1
        )));
    }
    let bits = (64 / prefix.len()) as u32;
    let mut key: u64 = 0;
    for &c in prefix {
        let encoded = if bits == 64 {
            (c as i128 - i64::MIN as i128) as u64
        } else {
            let half = 1i128 << (bits - 1);
            let shifted = c as i128 + half;
            if shifted < 0 || shifted >= (1i128 << bits) {
                return Err(Error::IndexOverflow(format!(
                    "coordinate {c} does not fit the {bits}-bit stream key"
                )));
            }
            shifted as u64
        };
        key = if bits == 64 { encoded } else { (key << bits) | encoded };
    }
    Ok(key)
}

fn word_position(last: i64) -> u128 {
    (last as i128 - i64::MIN as i128) as u128 * WORDS_PER_SITE
}

/// Standard normal pairs along one lattice row.
pub(crate) struct RowStream {
    rng: ChaCha8Rng,
}

impl RowStream {
    /// Positions the stream at site `prefix ++ [first_last]`.
    pub(crate) fn new(seed: u64, prefix: &[i64], first_last: i64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_key(prefix)?);
        rng.set_word_pos(word_position(first_last));
        Ok(RowStream { rng })
    }

    fn uniform_open_closed(&mut self) -> f64 {
        // (0, 1]
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent N(0, 1) draws for the next site (Box–Muller).
    pub(crate) fn next_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open_closed();
        let u2 = self.uniform_open_closed();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        (radius * angle.cos(), radius * angle.sin())
    }
}

/// The normal pair at one absolute site.
pub fn site_normals(seed: u64, site: &[i64]) -> Result<(f64, f64)> {
    let (last, prefix) = site
        .split_last()
        .ok_or_else(|| Error::invalid("empty lattice site"))?;
    Ok(RowStream::new(seed, prefix, *last)?.next_pair())
}
