//! Deterministic random streams.
//!
//! A stream is addressed by `(root_seed, stream_index)` and maps onto the
//! native stream counter of ChaCha, so two streams never share keystream and
//! the result of a work item never depends on scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StreamRng = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub root_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(root_seed: u64, stream_index: u64) -> Self {
        Self {
            root_seed,
            stream_index,
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Sub-stream `index` of this stream, for nesting per-item work under a
    /// per-split or per-pair stream.
    pub fn child(&self, index: u64) -> RngStream {
        let derived = splitmix64(self.root_seed ^ splitmix64(self.stream_index.wrapping_add(1)));
        RngStream::new(derived, index)
    }
}

pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, variance: f64) -> Result<f64> {
    if variance < 0.0 || variance.is_nan() {
        return Err(Error::NegativeVariance(variance));
    }
    if variance == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, variance.sqrt())
        .map_err(|e| Error::Domain(format!("gaussian({mean}, {variance}): {e}")))?;
    Ok(normal.sample(rng))
}

pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> Result<u64> {
    if rate < 0.0 || rate.is_nan() {
        return Err(Error::NegativeRate(rate));
    }
    if rate == 0.0 {
        return Ok(0);
    }
    let poisson =
        Poisson::new(rate).map_err(|e| Error::Domain(format!("poisson({rate}): {e}")))?;
    Ok(poisson.sample(rng) as u64)
}

/// Uniform draw on the half-open interval (0, 1].
pub fn open_closed_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
