//! Deterministic randomness for direction sampling and parameter
//! initialization: ChaCha12, a counter-based stream cipher generator,
//! seeded from a single u64. Reproducibility is promised within this
//! crate, not across implementations.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{Shape, Tensor};

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// (count, dim) matrix of i.i.d. standard normal entries.
pub fn gaussian_directions(rng: &mut ChaCha12Rng, count: usize, dim: usize) -> Tensor {
    let data = (0..count * dim)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Tensor::new(Shape::of(&[count, dim]), data).expect("shape matches data")
}

/// (count, dim) matrix of i.i.d. signs, each +1 or -1 with probability 1/2.
pub fn rademacher_directions(rng: &mut ChaCha12Rng, count: usize, dim: usize) -> Tensor {
    let data = (0..count * dim)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    Tensor::new(Shape::of(&[count, dim]), data).expect("shape matches data")
}

/// Uniform in [-bound, bound).
pub fn uniform(rng: &mut ChaCha12Rng, bound: f64) -> f64 {
    rng.gen_range(-bound..bound)
}
