//! Seeded random substreams.
//!
//! All randomness is drawn from ChaCha8 keyed by the run seed. Independent
//! consumers never share a generator: each one selects its own ChaCha stream
//! id, built from a purpose tag in the high 32 bits and a purpose-local index
//! (epoch number, split number, retry count) in the low 32 bits. Draws from
//! one purpose therefore cannot shift the draws of another, no matter how
//! many runs execute or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// What a substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum Purpose {
    /// Parameter initialisation.
    Init = 1,
    /// Minibatch order, one index per epoch.
    BatchOrder = 2,
    /// Power-iteration start vectors, one index per retry.
    PowerStart = 3,
    /// Dataset class centres.
    DataCenters = 4,
    /// Dataset samples, one index per split.
    DataSamples = 5,
    /// Random probes used by tests and examples.
    Probe = 6,
    /// Subsample used for end-of-run Hessian products.
    EigenSubset = 7,
}

pub fn substream(seed: u64, purpose: Purpose, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | u64::from(index));
    rng
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}
