//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream cipher generator
//! (`rand_chacha::ChaCha8Rng`) seeded with `seed_from_u64(seed)`. ChaCha is
//! counter based: independent streams for the same seed are selected with
//! [`ChaCha8Rng::set_stream`], which is how derived draws (for example fresh
//! counts after rescaling rates) stay reproducible without disturbing the
//! primary stream.
//!
//! Samplers:
//! - Student-t: `rand_distr::StudentT`, i.e. a standard normal divided by
//!   `sqrt(chi2(nu) / nu)`.
//! - Poisson: Knuth's multiplicative method, exact for any rate. Rates of 30
//!   or more are split into equal parts below 30 and summed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};

pub use rand_chacha::ChaCha8Rng as Generator;

/// Stream used for embedding initialization.
pub const STREAM_INIT: u64 = 0;
/// Stream used for stimuli and counts of synthetic datasets.
pub const STREAM_DATA: u64 = 1;
/// Stream used for fresh counts after rescaling rates.
pub const STREAM_RESAMPLE: u64 = 2;
/// Stream used for k-means seeding.
pub const STREAM_KMEANS: u64 = 3;

pub fn generator(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const KNUTH_MAX_RATE: f64 = 30.0;

/// Draws from `Poisson(lambda)`. A zero rate always yields zero.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    debug_assert!(lambda.is_finite() && lambda >= 0.0);
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < KNUTH_MAX_RATE {
        return poisson_knuth(rng, lambda);
    }
    let parts = libm::ceil(lambda / KNUTH_MAX_RATE) as u64;
    let piece = lambda / parts as f64;
    (0..parts).map(|_| poisson_knuth(rng, piece)).sum()
}

fn poisson_knuth<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    let limit = libm::exp(-lambda);
    let mut k = 0;
    let mut p: f64 = rng.random();
    while p > limit {
        k += 1;
        p *= rng.random::<f64>();
    }
    k
}

/// Draws from a Student-t distribution with `dof` degrees of freedom.
pub fn student_t<R: Rng + ?Sized>(rng: &mut R, dof: f64) -> f64 {
    StudentT::new(dof).expect("positive degrees of freedom").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = generator(42, STREAM_DATA).random();
        let b: u64 = generator(42, STREAM_DATA).random();
        let c: u64 = generator(42, STREAM_INIT).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn poisson_mean_and_variance() {
        let mut rng = generator(7, 0);
        for &lambda in &[0.05, 0.7, 3.0, 12.0, 45.0] {
            let n = 40_000;
            let draws: Vec<f64> = (0..n).map(|_| poisson(&mut rng, lambda) as f64).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (lambda / n as f64).sqrt();
            assert!((mean - lambda).abs() < 4.0 * se, "lambda {lambda}: mean {mean}");
            assert!((var - lambda).abs() < 0.05 * lambda + 0.01, "lambda {lambda}: var {var}");
        }
    }

    #[test]
    fn poisson_zero_rate() {
        let mut rng = generator(1, 0);
        assert_eq!(poisson(&mut rng, 0.0), 0);
    }

    #[test]
    fn student_t_has_heavy_but_finite_spread() {
        let mut rng = generator(3, 0);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| student_t(&mut rng, 3.0)).collect();
        assert!(draws.iter().all(|x| x.is_finite()));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05);
        // P(|T_3| < 1) = 0.6090...
        let inside = draws.iter().filter(|x| x.abs() < 1.0).count() as f64 / n as f64;
        assert!((inside - 0.6090).abs() < 0.01, "{inside}");
    }
}
