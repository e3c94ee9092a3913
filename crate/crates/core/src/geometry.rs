//! Poisson KL divergences between count vectors.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Stability constant used inside the log when none is given.
pub const DEFAULT_EPSILON: f64 = 1e-2;

/// `N x M` matrix of non-negative integer counts, one sample per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    n_samples: usize,
    n_features: usize,
    values: Vec<u64>,
}

impl CountMatrix {
    /// Requires at least two samples and one feature.
    pub fn new(n_samples: usize, n_features: usize, values: Vec<u64>) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::domain(format!("need at least 2 samples, got {n_samples}")));
        }
        if n_features < 1 {
            return Err(Error::domain("need at least 1 feature"));
        }
        if values.len() != n_samples * n_features {
            return Err(Error::shape(format!(
                "{} counts do not fill a {}x{} matrix",
                values.len(),
                n_samples,
                n_features
            )));
        }
        Ok(CountMatrix { n_samples, n_features, values })
    }

    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != m {
                return Err(Error::shape(format!("row {i} has {} features, expected {m}", r.as_ref().len())));
            }
            values.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), m, values)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[u64] {
        &self.values[n * self.n_features..(n + 1) * self.n_features]
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> u64 {
        self.values[n * self.n_features + m]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Fraction of entries equal to zero.
    pub fn zero_fraction(&self) -> f64 {
        let zeros = self.values.iter().filter(|&&v| v == 0).count();
        zeros as f64 / self.values.len() as f64
    }

    /// Counts as a real-valued matrix of rates.
    pub fn to_rates(&self) -> Matrix {
        Matrix::from_fn(self.n_samples, self.n_features, |i, j| self.get(i, j) as f64)
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.n_features, values)
    }
}

/// `N x N` matrix of summed per-feature divergences. Row `a`, column `b` holds
/// the divergence of sample `a` from sample `b`; it is generally asymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    values: Matrix,
    epsilon: f64,
}

impl DissimilarityMatrix {
    /// Wraps a precomputed square matrix. The diagonal is forced to zero and
    /// negative or non-finite entries are rejected.
    pub fn from_matrix(mut values: Matrix, epsilon: f64) -> Result<Self> {
        let (r, c) = values.shape();
        if r != c {
            return Err(Error::shape(format!("dissimilarity must be square, got {r}x{c}")));
        }
        if r < 2 {
            return Err(Error::domain("need at least 2 samples"));
        }
        for i in 0..r {
            values[(i, i)] = 0.0;
        }
        if let Some(bad) = values.as_slice().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::domain(format!("dissimilarities must be finite and non-negative, found {bad}")));
        }
        Ok(DissimilarityMatrix { values, epsilon })
    }

    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    Ok(())
}

/// Regularized KL divergence `KL(Pois(lambda1) || Pois(lambda2))`:
///
/// `lambda1 * ln((lambda1 + eps) / (lambda2 + eps)) + lambda2 - lambda1`
///
/// The stability constant enters only the log ratio; the linear terms use the
/// raw rates.
pub fn poisson_kl(lambda1: f64, lambda2: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::domain(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    Ok(kl_unchecked(lambda1, lambda2, epsilon))
}

#[inline]
fn kl_unchecked(lambda1: f64, lambda2: f64, epsilon: f64) -> f64 {
    // 0 * ln(eps / (l2 + eps)) is 0 even when the log is large
    let log_term = if lambda1 == 0.0 { 0.0 } else { lambda1 * libm::log((lambda1 + epsilon) / (lambda2 + epsilon)) };
    log_term + lambda2 - lambda1
}

/// Pairwise divergences between the rows of a count matrix.
pub fn dissimilarity_matrix(counts: &CountMatrix, epsilon: f64) -> Result<DissimilarityMatrix> {
    dissimilarity_from_rates(&counts.to_rates(), epsilon)
}

/// Pairwise divergences between the rows of a non-negative real matrix.
///
/// For integer counts and `epsilon < 0.5` every entry is non-negative. With
/// arbitrary real rates the regularized log ratio can leave entries slightly
/// below zero when two rates are nearly equal.
///
/// Each entry sums the per-feature divergences in ascending feature order, so
/// the result does not depend on how rows are scheduled.
pub fn dissimilarity_from_rates(rates: &Matrix, epsilon: f64) -> Result<DissimilarityMatrix> {
    check_epsilon(epsilon)?;
    let (n, m) = rates.shape();
    if n < 2 || m < 1 {
        return Err(Error::domain(format!("need at least 2 samples and 1 feature, got {n}x{m}")));
    }
    if let Some(bad) = rates.as_slice().iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::domain(format!("rates must be finite and non-negative, found {bad}")));
    }
    let mut d = Matrix::zeros(n, n);
    for a in 0..n {
        let ya = rates.row(a);
        for b in 0..n {
            if a == b {
                continue;
            }
            let yb = rates.row(b);
            let mut acc = 0.0;
            for k in 0..m {
                acc += kl_unchecked(ya[k], yb[k], epsilon);
            }
            d[(a, b)] = acc;
        }
    }
    Ok(DissimilarityMatrix { values: d, epsilon })
}

/// Squared Euclidean distances between raw count rows. Used as the baseline
/// geometry when comparing against the Poisson divergence.
pub fn squared_euclidean_matrix(counts: &CountMatrix) -> DissimilarityMatrix {
    let n = counts.n_samples();
    let mut d = Matrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let s: f64 = counts
                .row(a)
                .iter()
                .zip(counts.row(b))
                .map(|(&x, &y)| {
                    let diff = x as f64 - y as f64;
                    diff * diff
                })
                .sum();
            d[(a, b)] = s;
            d[(b, a)] = s;
        }
    }
    DissimilarityMatrix { values: d, epsilon: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // values from direct evaluation of the formula in double precision
    const KL_2_1: f64 = 0.376_368_782_435_632_1;
    const KL_1_2: f64 = 0.311_815_608_782_183_95;

    #[test]
    fn kl_of_identical_rates_is_zero() {
        assert_eq!(poisson_kl(1.0, 1.0, 0.01).unwrap(), 0.0);
        assert_eq!(poisson_kl(0.0, 0.0, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn kl_is_asymmetric() {
        let ab = poisson_kl(2.0, 1.0, 0.01).unwrap();
        let ba = poisson_kl(1.0, 2.0, 0.01).unwrap();
        assert!((ab - KL_2_1).abs() < 1e-14);
        assert!((ba - KL_1_2).abs() < 1e-14);
        // approaches 2 ln 2 - 1 as eps -> 0
        let lim = poisson_kl(2.0, 1.0, 1e-12).unwrap();
        assert!((lim - (2.0 * core::f64::consts::LN_2 - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn kl_rejects_bad_inputs() {
        assert!(poisson_kl(-1.0, 1.0, 0.01).is_err());
        assert!(poisson_kl(1.0, f64::NAN, 0.01).is_err());
        assert!(poisson_kl(1.0, f64::INFINITY, 0.01).is_err());
        assert!(poisson_kl(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn identical_rows_give_zero_matrix() {
        let y = CountMatrix::from_rows(&[[1u64], [1]]).unwrap();
        let d = dissimilarity_matrix(&y, 0.01).unwrap();
        assert_eq!(d.values().as_slice(), &[0.0; 4]);
    }

    #[test]
    fn single_feature_matrix_matches_scalar() {
        let y = CountMatrix::from_rows(&[[2u64], [1]]).unwrap();
        let d = dissimilarity_matrix(&y, 0.01).unwrap();
        assert!((d.get(0, 1) - KL_2_1).abs() < 1e-14);
        assert!((d.get(1, 0) - KL_1_2).abs() < 1e-14);
    }

    #[test]
    fn disjoint_unit_rows() {
        // (ln(1.01/0.01) - 1) + (0 + 1 - 0) = ln 101 in each direction
        let y = CountMatrix::from_rows(&[[1u64, 0], [0, 1]]).unwrap();
        let d = dissimilarity_matrix(&y, 0.01).unwrap();
        let want = libm::log(101.0);
        assert!((d.get(0, 1) - want).abs() < 1e-13);
        assert!((d.get(1, 0) - want).abs() < 1e-13);
    }

    #[test]
    fn count_matrix_validates_shape() {
        assert!(CountMatrix::new(1, 3, vec![0, 0, 0]).is_err());
        assert!(CountMatrix::new(2, 0, vec![]).is_err());
        assert!(CountMatrix::new(2, 2, vec![0, 0, 0]).is_err());
    }

    #[test]
    fn euclidean_baseline_is_symmetric() {
        let y = CountMatrix::from_rows(&[[0u64, 3], [4, 0], [1, 1]]).unwrap();
        let d = squared_euclidean_matrix(&y);
        assert_eq!(d.get(0, 1), 25.0);
        assert_eq!(d.get(1, 0), 25.0);
        assert_eq!(d.get(2, 2), 0.0);
    }

    fn counts_strategy() -> impl Strategy<Value = CountMatrix> {
        (2usize..8, 1usize..6).prop_flat_map(|(n, m)| {
            proptest::collection::vec(0u64..15, n * m).prop_map(move |v| CountMatrix::new(n, m, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn dissimilarity_is_non_negative_with_zero_diagonal(y in counts_strategy(), eps in 1e-4f64..0.1) {
            let d = dissimilarity_matrix(&y, eps).unwrap();
            for a in 0..y.n_samples() {
                prop_assert_eq!(d.get(a, a), 0.0);
                for b in 0..y.n_samples() {
                    prop_assert!(d.get(a, b) >= 0.0);
                }
            }
        }

        #[test]
        fn constant_feature_leaves_dissimilarity_unchanged(y in counts_strategy(), c in 0u64..20) {
            let n = y.n_samples();
            let m = y.n_features();
            let mut widened = Vec::new();
            for i in 0..n {
                widened.extend_from_slice(y.row(i));
                widened.push(c);
            }
            let y2 = CountMatrix::new(n, m + 1, widened).unwrap();
            let d1 = dissimilarity_matrix(&y, 0.01).unwrap();
            let d2 = dissimilarity_matrix(&y2, 0.01).unwrap();
            prop_assert_eq!(d1.values(), d2.values());
        }
    }
}
