//! Synthetic deviation series from overdamped Langevin dynamics.
//!
//! The chain `x' = x - phi'(x) dt + sqrt(2 dt / beta) xi` has the Gibbs
//! density `exp(-beta phi) / Z` as its stationary law, so its output is a
//! sample with a known potential. Steps that leave the domain are reflected
//! back across the nearest edge.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::maxent::PotentialSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("chain diverged at step {step} (x = {x}); reduce the time step")]
    StepTooLarge { step: u64, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub phi: PotentialSpec,
    pub beta: f64,
    pub n_samples: usize,
    /// Steps discarded before the first recorded state.
    pub burn_in: u64,
    /// Euler–Maruyama time step.
    pub step: f64,
    /// Steps between recorded states; 1 records every step.
    pub thin: u64,
    pub seed: u64,
}

impl SimConfig {
    /// Default step 1e-3, burn-in 10 000 steps, every step recorded.
    pub fn new(phi: PotentialSpec, beta: f64, n_samples: usize, seed: u64) -> Self {
        Self {
            phi,
            beta,
            n_samples,
            burn_in: 10_000,
            step: 1e-3,
            thin: 1,
            seed,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thin(mut self, thin: u64) -> Self {
        self.thin = thin;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.n_samples < 1 {
            return bad("n_samples must be at least 1".into());
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.thin < 1 {
            return bad("thin must be at least 1".into());
        }
        Ok(())
    }
}

/// Runs the chain from the potential's minimum and returns `n_samples`
/// states recorded after burn-in. Bit-identical for identical configs.
pub fn sample_stationary(config: &SimConfig) -> Result<Vec<f64>, SimError> {
    config.validate()?;
    let phi = &config.phi;
    let (lo, hi) = (phi.domain.lo, phi.domain.hi);
    let blowup = 10.0 * lo.abs().max(hi.abs());
    let dt = config.step;
    let noise = (2.0 * dt / config.beta).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut x = phi.argmin();
    let mut steps: u64 = 0;
    let mut advance = |x: &mut f64| -> Result<(), SimError> {
        let xi: f64 = StandardNormal.sample(&mut rng);
        let mut next = *x - phi.derivative(*x) * dt + noise * xi;
        steps += 1;
        if !next.is_finite() || next.abs() > blowup {
            return Err(SimError::StepTooLarge {
                step: steps,
                x: next,
            });
        }
        // one reflection per edge suffices unless the step overshoots the
        // whole domain, which the clamp catches
        if next > hi {
            next = 2.0 * hi - next;
        }
        if next < lo {
            next = 2.0 * lo - next;
        }
        *x = next.clamp(lo, hi);
        Ok(())
    };

    for _ in 0..config.burn_in {
        advance(&mut x)?;
    }
    let mut out = Vec::with_capacity(config.n_samples);
    for i in 0..config.n_samples {
        let between = if i == 0 && config.burn_in == 0 {
            0
        } else {
            config.thin
        };
        for _ in 0..between {
            advance(&mut x)?;
        }
        out.push(x);
    }
    Ok(out)
}
