use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::Weight;
use crate::space::FiniteSht;

/// `w(x) = t(x)^a` where `t` is the point coordinate, or `(i + 1/2)/n` for
/// spaces without coordinates. Coordinates must be positive.
pub fn power_weight(space: Arc<FiniteSht>, a: f64) -> Weight {
    let n = space.len();
    let values = match space.coords() {
        Some(c) => c.iter().map(|t| t.powf(a)).collect(),
        None => (0..n).map(|i| ((i as f64 + 0.5) / n as f64).powf(a)).collect(),
    };
    Weight::new(space, values).expect("power of positive coordinates")
}

/// Independent log-normal values `exp(sigma Z)`.
pub fn lognormal_weight(space: Arc<FiniteSht>, sigma: f64, seed: u64) -> Weight {
    let dist = LogNormal::new(0.0, sigma).expect("sigma must be finite and nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..space.len()).map(|_| dist.sample(&mut rng)).collect();
    Weight::new(space, values).expect("log-normal samples are positive")
}
