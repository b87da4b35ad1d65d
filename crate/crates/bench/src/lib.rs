//! Inputs shared by the benchmarks.

use potlab_core::{Domain, PotentialSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `n` standard normal draws from a fixed seed.
pub fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// The three closed-form families on `[-8, 8]`.
pub fn families() -> Vec<(&'static str, PotentialSpec)> {
    let d = Domain::symmetric(8.0).expect("valid domain");
    vec![
        (
            "quadratic",
            PotentialSpec::quadratic(1.0, d).expect("valid"),
        ),
        ("linear", PotentialSpec::linear(1.0, d).expect("valid")),
        (
            "log",
            PotentialSpec::log_regularized(1.0, 0.01, d).expect("valid"),
        ),
    ]
}
