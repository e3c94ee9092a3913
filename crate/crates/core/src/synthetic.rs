//! Poisson benchmark datasets with known group labels and manifold
//! coordinates.
//!
//! Each generator draws all stimuli `(t, h)` first, sample by sample, from the
//! data stream of the seed, then the counts row by row from the same stream.
//! Because the stimuli come first, changing `rate_scale` changes the counts but
//! never the stimuli.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::CountMatrix;
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorConfig {
    pub lambda_bias: f64,
    pub lambda_peak: f64,
    pub n_groups: usize,
    pub n_per_group: usize,
    pub n_features: usize,
    pub seed: u64,
    /// Multiplies both `lambda_bias` and `lambda_peak`.
    pub rate_scale: f64,
}

impl GeneratorConfig {
    /// Three groups of 20 stimuli on a circle, 40 neurons, rates in `[1, 9]`.
    pub fn angular() -> Self {
        GeneratorConfig {
            lambda_bias: 1.0,
            lambda_peak: 8.0,
            n_groups: 3,
            n_per_group: 20,
            n_features: 40,
            seed: 42,
            rate_scale: 1.0,
        }
    }

    /// Four groups of 30 stimuli along a line, 30 neurons, rates in `[0.1, 2.6]`.
    pub fn sparse_sequential() -> Self {
        GeneratorConfig {
            lambda_bias: 0.1,
            lambda_peak: 2.5,
            n_groups: 4,
            n_per_group: 30,
            n_features: 30,
            seed: 42,
            rate_scale: 1.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rate_scale(mut self, scale: f64) -> Self {
        self.rate_scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("lambda_bias", self.lambda_bias), ("lambda_peak", self.lambda_peak), ("rate_scale", self.rate_scale)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_groups < 1 || self.n_per_group < 1 || self.n_features < 1 {
            return Err(Error::domain("group count, group size and feature count must be positive"));
        }
        if self.n_groups * self.n_per_group < 2 {
            return Err(Error::domain("need at least 2 samples"));
        }
        Ok(())
    }

    /// Smallest rate the generator can produce.
    pub fn min_rate(&self) -> f64 {
        self.lambda_bias * self.rate_scale
    }

    /// Largest rate the generator can produce.
    pub fn max_rate(&self) -> f64 {
        (self.lambda_bias + self.lambda_peak) * self.rate_scale
    }
}

/// Counts with the rates that generated them and per-sample ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub counts: CountMatrix,
    pub rates: Matrix,
    /// Group index, contiguous from 0.
    pub group: Vec<usize>,
    pub manifold_t: Vec<f64>,
    pub manifold_h: Vec<f64>,
    /// Indices (in generation order) of all-zero samples that were dropped.
    pub removed: Vec<usize>,
    /// Seed the dataset was generated with; resampling derives its stream from it.
    pub seed: u64,
}

impl LabeledDataset {
    pub fn n_samples(&self) -> usize {
        self.counts.n_samples()
    }

    pub fn n_groups(&self) -> usize {
        self.group.iter().max().map_or(0, |g| g + 1)
    }

    /// Mean of `exp(-lambda)` over all entries: the expected zero fraction.
    pub fn expected_zero_fraction(&self) -> f64 {
        let r = self.rates.as_slice();
        r.iter().map(|&l| libm::exp(-l)).sum::<f64>() / r.len() as f64
    }
}

/// Circular distance between two angles, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = libm::fmod(libm::fabs(a - b), 2.0 * PI);
    d.min(2.0 * PI - d)
}

struct Stimulus {
    group: usize,
    t: f64,
    h: f64,
}

fn draw_stimuli<R: Rng>(
    gen: &mut R,
    config: &GeneratorConfig,
    t_range: impl Fn(usize) -> (f64, f64),
    h_max: f64,
) -> Vec<Stimulus> {
    let mut out = Vec::with_capacity(config.n_groups * config.n_per_group);
    for g in 0..config.n_groups {
        let (lo, hi) = t_range(g);
        for _ in 0..config.n_per_group {
            let t = gen.random_range(lo..hi);
            let h = gen.random_range(0.0..h_max);
            out.push(Stimulus { group: g, t, h });
        }
    }
    out
}

fn sample_counts<R: Rng>(gen: &mut R, rates: &Matrix) -> Vec<u64> {
    rates.as_slice().iter().map(|&l| rng::poisson(gen, l)).collect()
}

/// Angular embedding benchmark: a simulated population of neurons tuned to a
/// circular variable `t` and a linear variable `h`.
///
/// Group `g` draws `t ~ U(2 pi g / 3 + 3 pi / 2, 2 pi (g + 1) / 3 + 3 pi / 2)` and
/// `h ~ U(0, 10)`. Neuron `m` prefers `t* = 3 pi / 2 + 2 pi (m mod 20) / 20`,
/// `h* = 10 floor(m / 20) / 2`, with rate
/// `bias + peak * exp(-dt^2 / 2 - dh^2 / 20)` and `dt` the circular distance.
pub fn generate_angular(config: &GeneratorConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let mut gen = rng::generator(config.seed, rng::STREAM_DATA);
    let groups = config.n_groups as f64;
    let stimuli = draw_stimuli(
        &mut gen,
        config,
        |g| {
            let g = g as f64;
            (2.0 * PI * g / groups + 1.5 * PI, 2.0 * PI * (g + 1.0) / groups + 1.5 * PI)
        },
        10.0,
    );
    let bias = config.lambda_bias * config.rate_scale;
    let peak = config.lambda_peak * config.rate_scale;
    let rates = Matrix::from_fn(stimuli.len(), config.n_features, |i, m| {
        let t_pref = 1.5 * PI + 2.0 * PI * (m % 20) as f64 / 20.0;
        let h_pref = 10.0 * (m / 20) as f64 / 2.0;
        let dt = circular_distance(stimuli[i].t, t_pref);
        let dh = stimuli[i].h - h_pref;
        bias + peak * libm::exp(-dt * dt / 2.0 - dh * dh / 20.0)
    });
    let counts = sample_counts(&mut gen, &rates);
    assemble(stimuli, rates, counts, config, false)
}

/// Sparse sequential benchmark: low-rate neurons tiled along a line.
///
/// Group `g` draws `t ~ U(1.5 g + 1.5, 1.5 (g + 1) + 1.5)` and `h ~ U(0, 5)`.
/// Neuron `m` prefers `t* = 1.5 + 6 (m mod 25) / 25`, `h* = 5 floor(m / 25) / 2`,
/// with rate `bias + peak * exp(-d^2 / 3)` and `d` the Euclidean distance to
/// the preferred position. Samples whose counts are all zero are dropped.
pub fn generate_sparse_sequential(config: &GeneratorConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let mut gen = rng::generator(config.seed, rng::STREAM_DATA);
    let stimuli = draw_stimuli(
        &mut gen,
        config,
        |g| {
            let g = g as f64;
            (1.5 * g + 1.5, 1.5 * (g + 1.0) + 1.5)
        },
        5.0,
    );
    let bias = config.lambda_bias * config.rate_scale;
    let peak = config.lambda_peak * config.rate_scale;
    let rates = Matrix::from_fn(stimuli.len(), config.n_features, |i, m| {
        let t_pref = 1.5 + 6.0 * (m % 25) as f64 / 25.0;
        let h_pref = 5.0 * (m / 25) as f64 / 2.0;
        let dt = stimuli[i].t - t_pref;
        let dh = stimuli[i].h - h_pref;
        bias + peak * libm::exp(-(dt * dt + dh * dh) / 3.0)
    });
    let counts = sample_counts(&mut gen, &rates);
    assemble(stimuli, rates, counts, config, true)
}

fn assemble(
    stimuli: Vec<Stimulus>,
    rates: Matrix,
    counts: Vec<u64>,
    config: &GeneratorConfig,
    drop_empty: bool,
) -> Result<LabeledDataset> {
    let m = config.n_features;
    let mut keep = Vec::with_capacity(stimuli.len());
    let mut removed = Vec::new();
    for i in 0..stimuli.len() {
        if drop_empty && counts[i * m..(i + 1) * m].iter().all(|&c| c == 0) {
            removed.push(i);
        } else {
            keep.push(i);
        }
    }
    let mut kept_counts = Vec::with_capacity(keep.len() * m);
    let mut kept_rates = Vec::with_capacity(keep.len() * m);
    for &i in &keep {
        kept_counts.extend_from_slice(&counts[i * m..(i + 1) * m]);
        kept_rates.extend_from_slice(rates.row(i));
    }
    Ok(LabeledDataset {
        counts: CountMatrix::new(keep.len(), m, kept_counts)?,
        rates: Matrix::from_vec(keep.len(), m, kept_rates)?,
        group: keep.iter().map(|&i| stimuli[i].group).collect(),
        manifold_t: keep.iter().map(|&i| stimuli[i].t).collect(),
        manifold_h: keep.iter().map(|&i| stimuli[i].h).collect(),
        removed,
        seed: config.seed,
    })
}

/// Multiplies every rate by `scale` and draws fresh counts from the resample
/// stream of the dataset's seed. Labels and manifold coordinates are kept, and
/// no rows are dropped.
pub fn rescale_rates(data: &LabeledDataset, scale: f64) -> Result<LabeledDataset> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(format!("scale must be positive, got {scale}")));
    }
    let rates = data.rates.map(|l| l * scale);
    let mut gen = rng::generator(data.seed, rng::STREAM_RESAMPLE);
    let counts = sample_counts(&mut gen, &rates);
    Ok(LabeledDataset {
        counts: CountMatrix::new(rates.rows(), rates.cols(), counts)?,
        rates,
        group: data.group.clone(),
        manifold_t: data.manifold_t.clone(),
        manifold_h: data.manifold_h.clone(),
        removed: data.removed.clone(),
        seed: data.seed,
    })
}

/// Scale `s` at which the mean Poisson zero probability `mean(exp(-s * rate))`
/// equals `target`, found by bisection on `ln s`. `rates` are the unscaled
/// rates.
pub fn scale_for_zero_fraction(rates: &Matrix, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::domain(format!("target zero fraction must be in (0, 1), got {target}")));
    }
    let r = rates.as_slice();
    if r.is_empty() || r.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::domain("rates must be positive and finite"));
    }
    let zero_frac = |s: f64| r.iter().map(|&l| libm::exp(-s * l)).sum::<f64>() / r.len() as f64;
    // zero_frac decreases in s
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if zero_frac(libm::exp(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(libm::exp(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_defaults_have_expected_shape_and_bounds() {
        let d = generate_angular(&GeneratorConfig::angular()).unwrap();
        assert_eq!(d.counts.n_samples(), 60);
        assert_eq!(d.counts.n_features(), 40);
        assert!(d.rates.as_slice().iter().all(|&l| (1.0..=9.0).contains(&l)));
        assert_eq!(d.n_groups(), 3);
        assert!(d.removed.is_empty());
        for g in 0..3 {
            assert_eq!(d.group.iter().filter(|&&x| x == g).count(), 20);
        }
    }

    #[test]
    fn sequential_defaults_have_expected_bounds() {
        let d = generate_sparse_sequential(&GeneratorConfig::sparse_sequential()).unwrap();
        assert!(d.n_samples() <= 120);
        assert_eq!(d.n_samples() + d.removed.len(), 120);
        assert!(d.rates.as_slice().iter().all(|&l| (0.1..=2.6 + 1e-12).contains(&l)));
        for i in 0..d.n_samples() {
            assert!(d.counts.row(i).iter().any(|&c| c > 0));
        }
        assert_eq!(d.group.len(), d.n_samples());
        assert_eq!(d.manifold_t.len(), d.n_samples());
    }

    #[test]
    fn peak_rate_at_preferred_position() {
        // neuron 0 prefers t = 3 pi / 2, h = 0
        let dt = circular_distance(1.5 * PI, 1.5 * PI);
        assert_eq!(1.0 + 8.0 * libm::exp(-dt * dt / 2.0), 9.0);
        assert_eq!(0.1 + 2.5 * libm::exp(-0.0 / 3.0), 2.6);
    }

    #[test]
    fn circular_distance_is_bounded() {
        for i in 0..200 {
            for j in 0..50 {
                let a = i as f64 * 0.137;
                let b = j as f64 * 0.91 - 3.0;
                let d = circular_distance(a, b);
                assert!((0.0..=PI + 1e-12).contains(&d));
            }
        }
        assert!((circular_distance(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_data() {
        let c = GeneratorConfig::sparse_sequential();
        assert_eq!(generate_sparse_sequential(&c).unwrap(), generate_sparse_sequential(&c).unwrap());
        let other = generate_sparse_sequential(&c.clone().with_seed(43)).unwrap();
        assert_ne!(generate_sparse_sequential(&c).unwrap().counts, other.counts);
    }

    #[test]
    fn rate_scale_keeps_stimuli() {
        let base = generate_angular(&GeneratorConfig::angular()).unwrap();
        let scaled = generate_angular(&GeneratorConfig::angular().with_rate_scale(0.5)).unwrap();
        assert_eq!(base.manifold_t, scaled.manifold_t);
        assert!(scaled.rates.as_slice().iter().all(|&l| (0.5..=4.5).contains(&l)));
    }

    #[test]
    fn rescale_by_one_keeps_rates() {
        let d = generate_angular(&GeneratorConfig::angular()).unwrap();
        let r = rescale_rates(&d, 1.0).unwrap();
        assert_eq!(r.rates, d.rates);
        assert_eq!(r.group, d.group);
        assert!(rescale_rates(&d, 0.0).is_err());
        assert!(rescale_rates(&d, -2.0).is_err());
    }

    #[test]
    fn rescale_halves_mean_count() {
        let d = generate_angular(&GeneratorConfig::angular()).unwrap();
        let half = rescale_rates(&d, 0.5).unwrap();
        let mean = |c: &CountMatrix| c.values().iter().sum::<u64>() as f64 / c.values().len() as f64;
        let want = 0.5 * d.rates.as_slice().iter().sum::<f64>() / d.rates.as_slice().len() as f64;
        assert!((mean(&half.counts) - want).abs() < 0.1 * want);
    }

    #[test]
    fn heavy_rescale_matches_analytic_zero_fraction() {
        let d = generate_angular(&GeneratorConfig::angular()).unwrap();
        let small = rescale_rates(&d, 0.05).unwrap();
        let analytic = small.expected_zero_fraction();
        assert!((small.counts.zero_fraction() - analytic).abs() < 0.03);
    }

    #[test]
    fn solved_scale_hits_target() {
        let d = generate_sparse_sequential(&GeneratorConfig::sparse_sequential()).unwrap();
        for &target in &[0.7, 0.85, 0.95] {
            let s = scale_for_zero_fraction(&d.rates, target).unwrap();
            let got = rescale_rates(&d, s).unwrap().expected_zero_fraction();
            assert!((got - target).abs() < 1e-9);
        }
        assert!(scale_for_zero_fraction(&d.rates, 1.0).is_err());
    }

    #[test]
    fn counts_track_rates_over_seeds() {
        // per-feature mean over regenerations, within 3 standard errors in
        // at least 99% of cells (a few exceed by chance)
        let runs = 200;
        let config = GeneratorConfig::angular();
        let base = generate_angular(&config).unwrap();
        let mut sums = alloc::vec![0.0; base.rates.as_slice().len()];
        for s in 0..runs {
            let d = rescale_rates(&LabeledDataset { seed: 1000 + s, ..base.clone() }, 1.0).unwrap();
            for (acc, &c) in sums.iter_mut().zip(d.counts.values()) {
                *acc += c as f64;
            }
        }
        let mut outside = 0;
        for (acc, &l) in sums.iter().zip(base.rates.as_slice()) {
            let mean = acc / runs as f64;
            let se = libm::sqrt(l / runs as f64);
            if (mean - l).abs() > 3.0 * se {
                outside += 1;
            }
        }
        assert!(outside as f64 <= 0.01 * sums.len() as f64, "{outside} cells outside 3 SE");
    }
}
