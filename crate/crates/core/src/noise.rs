//! Seeded Gaussian noise for the synthetic degradation pipeline.
//!
//! Algorithm (pinned, changing it changes every generated sequence):
//! - Uniform bits come from ChaCha20 (`rand_chacha` 0.3.1), seeded with
//!   `SeedableRng::seed_from_u64(seed)` (`rand_core` 0.6.4).
//! - Each uniform consumes one `next_u64`; the top 53 bits give `u2 ∈ [0, 1)`
//!   and `u1 = (bits + 1) / 2^53 ∈ (0, 1]`.
//! - Box–Muller draws `u1` then `u2` and yields `r cos θ` followed by `r sin θ`
//!   with `r = sqrt(-2 ln u1)`, `θ = 2π u2`.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub const NOISE_ALGORITHM: &str = "chacha20-seed_from_u64/box-muller v1";

const SCALE: f64 = 1.0 / (1u64 << 53) as f64;

pub struct GaussianNoise {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * SCALE
    }

    /// Standard normal deviate.
    pub fn standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * SCALE;
        let u2 = (self.rng.next_u64() >> 11) as f64 * SCALE;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}
