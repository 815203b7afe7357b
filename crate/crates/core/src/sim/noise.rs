//! Per-episode Gaussian range noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::scan::MAX_RANGE;

/// Upper bound of the per-episode noise standard deviation, in meters.
pub const SIGMA_MAX: f64 = 0.5;

/// Draws the episode's noise level, uniform in `[0, SIGMA_MAX]`.
pub fn draw_sigma<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(0.0..=SIGMA_MAX)
}

/// Adds zero-mean Gaussian noise with standard deviation `sigma` to every
/// beam and clips the result to `[0, MAX_RANGE]`.
pub fn add_noise<R: Rng + ?Sized>(scan: &mut [f32], sigma: f64, rng: &mut R) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    for r in scan.iter_mut() {
        let noisy = *r as f64 + normal.sample(rng);
        *r = noisy.clamp(0.0, MAX_RANGE as f64) as f32;
    }
}
