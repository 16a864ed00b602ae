//! Seeded Gaussian streams.
//!
//! Generator: ChaCha20 (`rand_chacha` 0.3) keyed with `seed_from_u64(seed)`,
//! i.e. the 64-bit seed is expanded to a 256-bit key by the PCG32 procedure
//! documented in `rand_core` 0.6. Independent sub-streams are selected with
//! `set_stream(id)`; the block counter starts at zero.
//!
//! Normal deviates use the cosine branch of Box-Muller and consume exactly two
//! `u64` words each:
//!
//! ```text
//! u1 = 1 - (x1 >> 11) * 2^-53        in (0, 1]
//! u2 =     (x2 >> 11) * 2^-53        in [0, 1)
//! z  = sqrt(-2 ln u1) * cos(2 pi u2)
//! ```
//!
//! Any language with a ChaCha20 implementation can reproduce the draws.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Version tag of the stream layout above. Bump if anything changes.
pub const STREAM_VERSION: u32 = 1;

/// Stream id used for the outer weights `a`.
pub const STREAM_OUTER: u64 = 0;
/// Stream id used for the inner weights `W` (row-major).
pub const STREAM_INNER: u64 = 1;

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

pub struct GaussianStream {
    rng: ChaCha20Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// One standard normal deviate.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f64], std_dev: f64) {
        for v in out {
            *v = std_dev * self.next_normal();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = GaussianStream::new(7, STREAM_OUTER);
        let mut b = GaussianStream::new(7, STREAM_OUTER);
        for _ in 0..100 {
            assert_eq!(a.next_normal().to_bits(), b.next_normal().to_bits());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = GaussianStream::new(7, STREAM_OUTER);
        let mut b = GaussianStream::new(7, STREAM_INNER);
        let xa: Vec<f64> = (0..8).map(|_| a.next_normal()).collect();
        let xb: Vec<f64> = (0..8).map(|_| b.next_normal()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn moments_are_standard() {
        let mut g = GaussianStream::new(42, 3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| g.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
        assert!(xs.iter().all(|x| x.is_finite()));
    }
}
