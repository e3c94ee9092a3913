//! Brute-force reference computations.
//!
//! Nothing in here calls into the production modules it is meant to check:
//! the KL series sums Poisson log-pmf terms, the cost oracle recomputes the
//! Student-t distribution with a plain double loop, and gradients come from
//! central differences of that loop.

use alloc::format;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Fixed number of series terms. `None` uses `max(200, lambda + 40 sqrt(lambda))`
    /// with `lambda` the larger of the two rates.
    pub series_cutoff: Option<usize>,
    /// Step for central differences.
    pub fd_step: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { series_cutoff: None, fd_step: 1e-5 }
    }
}

impl OracleConfig {
    pub fn cutoff_for(&self, lambda1: f64, lambda2: f64) -> usize {
        self.series_cutoff.unwrap_or_else(|| {
            let lam = lambda1.max(lambda2);
            let adaptive = libm::ceil(lam + 40.0 * libm::sqrt(lam)) as usize;
            adaptive.max(200)
        })
    }
}

fn log_poisson_pmf(k: usize, lambda: f64) -> f64 {
    let kf = k as f64;
    -lambda + kf * libm::log(lambda) - libm::lgamma(kf + 1.0)
}

/// `sum_k U(k) ln(U(k) / V(k))` for `U = Pois(lambda1)`, `V = Pois(lambda2)`,
/// truncated at the configured cutoff.
pub fn kl_series_oracle(lambda1: f64, lambda2: f64, config: &OracleConfig) -> Result<f64> {
    if !(lambda1.is_finite() && lambda1 > 0.0 && lambda2.is_finite() && lambda2 > 0.0) {
        return Err(Error::domain(format!("series form needs strictly positive rates, got ({lambda1}, {lambda2})")));
    }
    let cutoff = config.cutoff_for(lambda1, lambda2);
    Ok(kl_series_terms(lambda1, lambda2, cutoff))
}

/// Series truncated after `terms` terms (`k = 0 .. terms`).
pub fn kl_series_terms(lambda1: f64, lambda2: f64, terms: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..=terms {
        let log_u = log_poisson_pmf(k, lambda1);
        let log_v = log_poisson_pmf(k, lambda2);
        let u = libm::exp(log_u);
        if u == 0.0 {
            continue;
        }
        total += u * (log_u - log_v);
    }
    total
}

/// Central-difference gradient of a scalar function of a matrix.
pub fn finite_difference_gradient<F: Fn(&Matrix) -> f64>(f: F, x: &Matrix, step: f64) -> Matrix {
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + step;
            let up = f(&probe);
            probe[(i, j)] = orig - step;
            let down = f(&probe);
            probe[(i, j)] = orig;
            grad[(i, j)] = (up - down) / (2.0 * step);
        }
    }
    grad
}

/// Student-t joint distribution of the embedded points, computed naively.
pub fn student_t_q_oracle(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut q = Matrix::zeros(n, n);
    let mut z = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut sq = 0.0;
            for p in 0..x.cols() {
                let d = x[(a, p)] - x[(b, p)];
                sq += d * d;
            }
            q[(a, b)] = 1.0 / (1.0 + sq);
            z += q[(a, b)];
        }
    }
    for a in 0..n {
        for b in 0..n {
            q[(a, b)] /= z;
        }
    }
    q
}

/// `sqrt(1/2 * sum_{a != b} (sqrt(S) - sqrt(Q))^2)` by a double loop.
pub fn cost_entrywise_oracle(s: &Matrix, q: &Matrix) -> f64 {
    let n = s.rows();
    let mut f = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let d = libm::sqrt(s[(a, b)]) - libm::sqrt(q[(a, b)]);
                f += d * d;
            }
        }
    }
    libm::sqrt(0.5 * f)
}

/// Hellinger cost of an embedding against a fixed affinity weighting.
pub fn embedding_cost_oracle(x: &Matrix, s: &Matrix) -> f64 {
    cost_entrywise_oracle(s, &student_t_q_oracle(x))
}

/// Central-difference gradient of [`embedding_cost_oracle`].
pub fn hellinger_fd_gradient(x: &Matrix, s: &Matrix, step: f64) -> Matrix {
    finite_difference_gradient(|probe| embedding_cost_oracle(probe, s), x, step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_known_values() {
        let cfg = OracleConfig::default();
        assert!(kl_series_oracle(1.0, 1.0, &cfg).unwrap().abs() < 1e-15);
        let v = kl_series_oracle(1.0, 2.0, &cfg).unwrap();
        assert!((v - (1.0 - core::f64::consts::LN_2)).abs() < 1e-12);
        let v = kl_series_oracle(5.0, 0.5, &cfg).unwrap();
        assert!((v - (5.0 * libm::log(10.0) - 4.5)).abs() < 1e-10);
    }

    #[test]
    fn series_rejects_zero_rate() {
        assert!(kl_series_oracle(1.0, 0.0, &OracleConfig::default()).is_err());
        assert!(kl_series_oracle(0.0, 1.0, &OracleConfig::default()).is_err());
    }

    #[test]
    fn series_is_converged_at_cutoff() {
        let cfg = OracleConfig::default();
        for &l1 in &[0.1, 1.0, 5.0, 20.0, 30.0] {
            for &l2 in &[0.1, 2.0, 20.0] {
                let n = cfg.cutoff_for(l1, l2);
                let a = kl_series_terms(l1, l2, n);
                let b = kl_series_terms(l1, l2, n + 10);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fd_of_simple_functions() {
        let x = Matrix::from_vec(1, 1, alloc::vec![3.0]).unwrap();
        let g = finite_difference_gradient(|m| m[(0, 0)] * m[(0, 0)], &x, 1e-5);
        assert!((g[(0, 0)] - 6.0).abs() < 1e-8);
        let x = Matrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let g = finite_difference_gradient(|_| 4.2, &x, 1e-5);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cost_oracle_basic_cases() {
        let s = Matrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]).unwrap();
        assert_eq!(cost_entrywise_oracle(&s, &s), 0.0);
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(embedding_cost_oracle(&x, &s).abs() < 1e-15);
    }
}
