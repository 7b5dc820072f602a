//! Seeded Gaussian draws with a pinned, portable algorithm.
//!
//! Uniform bits come from ChaCha8 (a documented, stable stream cipher; the
//! same seed yields the same bytes on every platform), and standard-normal
//! variates are produced by pairwise Box-Muller:
//!
//! `z₀ = √(−2 ln u₁)·cos(2π u₂)`, `z₁ = √(−2 ln u₁)·sin(2π u₂)`
//!
//! with `u₁ ∈ (0, 1]`, `u₂ ∈ [0, 1)`. The second variate of each pair is
//! cached and returned by the following call. Same seed in, same doubles
//! out — trajectories are reproducible bit for bit.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct GaussianRng {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    /// Next standard-normal variate.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 − x maps the generator's [0, 1) onto (0, 1], keeping ln finite.
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Vector of independent standard normals, drawn component 0 first.
    pub fn standard_normal_vector(&mut self, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| self.standard_normal())
    }
}
