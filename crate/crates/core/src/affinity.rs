//! High-dimensional neighbor distributions built from a dissimilarity matrix.

use alloc::format;

use crate::error::{Error, Result};
use crate::geometry::DissimilarityMatrix;
use crate::matrix::Matrix;

/// Row-stochastic matrix of conditional neighbor probabilities `p(b | a)`,
/// stored at row `a`, column `b`. The diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    values: Matrix,
    sharpness: f64,
}

impl ConditionalMatrix {
    /// Wraps a square matrix whose rows are already normalized.
    pub fn from_matrix(values: Matrix, sharpness: f64) -> Result<Self> {
        let (r, c) = values.shape();
        if r != c || r < 2 {
            return Err(Error::shape(format!("conditionals must be square with N >= 2, got {r}x{c}")));
        }
        for i in 0..r {
            if values[(i, i)] != 0.0 {
                return Err(Error::domain(format!("conditional diagonal entry {i} is not zero")));
            }
            let row_sum: f64 = values.row(i).iter().sum();
            if values.row(i).iter().any(|v| !(0.0..=1.0).contains(v)) || libm::fabs(row_sum - 1.0) > 1e-9 {
                return Err(Error::domain(format!("conditional row {i} is not a distribution")));
            }
        }
        Ok(ConditionalMatrix { values, sharpness })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }
}

/// Symmetric joint distribution over ordered sample pairs. Entries are
/// non-negative, the diagonal is zero and the total mass is one.
///
/// After [`exaggerate`] without renormalization the mass is `alpha` instead;
/// the cost treats such a matrix as a weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    values: Matrix,
}

impl AffinityMatrix {
    /// Wraps a square matrix of non-negative weights with zero diagonal.
    ///
    /// Symmetry and normalization are not enforced here so that arbitrary
    /// weightings can be fed to the cost and gradient.
    pub fn from_matrix(values: Matrix) -> Result<Self> {
        let (r, c) = values.shape();
        if r != c || r < 2 {
            return Err(Error::shape(format!("affinity must be square with N >= 2, got {r}x{c}")));
        }
        if values.as_slice().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("affinity entries must be finite and non-negative"));
        }
        for i in 0..r {
            if values[(i, i)] != 0.0 {
                return Err(Error::domain(format!("affinity diagonal entry {i} is not zero")));
            }
        }
        Ok(AffinityMatrix { values })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }
}

/// Softmax of `-w * D` over each row, excluding the sample itself.
///
/// Each row is shifted by its largest exponent before exponentiation, so very
/// large divergences underflow to zero instead of overflowing.
pub fn conditional_probabilities(dist: &DissimilarityMatrix, w: f64) -> Result<ConditionalMatrix> {
    let n = dist.n_samples();
    if n < 2 {
        return Err(Error::domain("need at least 2 samples"));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::domain(format!("sharpness must be positive, got {w}")));
    }
    let mut p = Matrix::zeros(n, n);
    for a in 0..n {
        let mut shift = f64::NEG_INFINITY;
        for b in (0..n).filter(|&b| b != a) {
            shift = shift.max(-w * dist.get(a, b));
        }
        let mut norm = 0.0;
        for b in (0..n).filter(|&b| b != a) {
            let e = libm::exp(-w * dist.get(a, b) - shift);
            p[(a, b)] = e;
            norm += e;
        }
        for v in p.row_mut(a) {
            *v /= norm;
        }
    }
    Ok(ConditionalMatrix { values: p, sharpness: w })
}

/// `S[a,b] = (p(b|a) + p(a|b)) / 2N`.
pub fn symmetrize(cond: &ConditionalMatrix) -> AffinityMatrix {
    let n = cond.n_samples();
    let p = cond.values();
    let denom = 2.0 * n as f64;
    let mut s = Matrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let v = (p[(a, b)] + p[(b, a)]) / denom;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    AffinityMatrix { values: s }
}

/// Early exaggeration. Returns `alpha * S`, or `alpha * S / sum(alpha * S)`
/// when `renormalize` is set (which gives back `S` up to rounding).
pub fn exaggerate(s: &AffinityMatrix, alpha: f64, renormalize: bool) -> Result<AffinityMatrix> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::domain(format!("exaggeration factor must be >= 1, got {alpha}")));
    }
    let scaled = s.values.map(|v| alpha * v);
    if !renormalize {
        return Ok(AffinityMatrix { values: scaled });
    }
    let total = scaled.sum();
    Ok(AffinityMatrix { values: scaled.map(|v| v / total) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(rows: &[&[f64]]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_matrix(Matrix::from_rows(rows).unwrap(), 0.01).unwrap()
    }

    #[test]
    fn two_samples_take_all_mass() {
        let d = dist(&[&[0.0, 7.5], &[0.3, 0.0]]);
        let p = conditional_probabilities(&d, 1.0).unwrap();
        assert_eq!(p.values().as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        let s = symmetrize(&p);
        assert_eq!(s.values().as_slice(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn uniform_distances_give_uniform_conditionals() {
        let d = Matrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 2.5 });
        let d = DissimilarityMatrix::from_matrix(d, 0.01).unwrap();
        let p = conditional_probabilities(&d, 1.0).unwrap();
        let s = symmetrize(&p);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((p.values()[(i, j)] - 1.0 / 3.0).abs() < 1e-15);
                    assert!((s.get(i, j) - 1.0 / 12.0).abs() < 1e-15);
                }
            }
        }
        assert!((s.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_of_row() {
        // p proportional to [e^-1, e^-2]
        let d = dist(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let p = conditional_probabilities(&d, 1.0).unwrap();
        let e1 = libm::exp(-1.0);
        let e2 = libm::exp(-2.0);
        assert!((p.values()[(0, 1)] - e1 / (e1 + e2)).abs() < 1e-15);
        assert!((p.values()[(0, 2)] - e2 / (e1 + e2)).abs() < 1e-15);
        assert!((p.values()[(0, 1)] - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn huge_divergences_do_not_overflow() {
        let d = dist(&[&[0.0, 5000.0, 5100.0], &[1e4, 0.0, 2e4], &[3.0, 9e3, 0.0]]);
        let p = conditional_probabilities(&d, 2.0).unwrap();
        assert!(p.values().is_finite());
        assert!((p.values()[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn asymmetric_three_by_three_matches_entrywise() {
        let raw = [[0.0, 0.7, 0.3], [0.1, 0.0, 0.9], [0.5, 0.5, 0.0]];
        let cond = ConditionalMatrix::from_matrix(Matrix::from_rows(&raw).unwrap(), 1.0).unwrap();
        let s = symmetrize(&cond);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 0.0 } else { (raw[a][b] + raw[b][a]) / 6.0 };
                assert!((s.get(a, b) - want).abs() < 1e-15);
                assert_eq!(s.get(a, b), s.get(b, a));
            }
        }
        assert!((s.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let d = dist(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(conditional_probabilities(&d, 0.0).is_err());
        assert!(conditional_probabilities(&d, -1.0).is_err());
        let s = symmetrize(&conditional_probabilities(&d, 1.0).unwrap());
        assert!(exaggerate(&s, 0.5, false).is_err());
    }

    #[test]
    fn exaggeration_modes() {
        let d = dist(&[&[0.0, 1.0, 4.0], &[2.0, 0.0, 1.0], &[0.5, 3.0, 0.0]]);
        let s = symmetrize(&conditional_probabilities(&d, 1.0).unwrap());
        assert_eq!(exaggerate(&s, 1.0, false).unwrap(), s);
        let renorm = exaggerate(&s, 4.0, true).unwrap();
        assert!(renorm.values().max_abs_diff(s.values()) < 1e-15);
        let plain = exaggerate(&s, 4.0, false).unwrap();
        for (x, y) in plain.values().as_slice().iter().zip(s.values().as_slice()) {
            assert_eq!(*x, 4.0 * y);
        }
    }

    fn dist_strategy() -> impl Strategy<Value = DissimilarityMatrix> {
        (2usize..10).prop_flat_map(|n| {
            proptest::collection::vec(0.0f64..50.0, n * n)
                .prop_map(move |v| DissimilarityMatrix::from_matrix(Matrix::from_vec(n, n, v).unwrap(), 0.01).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rows_are_stochastic_and_joint_is_normalized(d in dist_strategy(), wi in 0usize..3) {
            let w = [0.5, 1.0, 2.0][wi];
            let p = conditional_probabilities(&d, w).unwrap();
            let n = d.n_samples();
            for a in 0..n {
                let sum: f64 = p.values().row(a).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert_eq!(p.values()[(a, a)], 0.0);
            }
            let s = symmetrize(&p);
            prop_assert!((s.total() - 1.0).abs() < 1e-12);
            for a in 0..n {
                for b in 0..n {
                    prop_assert_eq!(s.get(a, b), s.get(b, a));
                }
            }
        }

        #[test]
        fn row_shift_is_invisible(d in dist_strategy(), c in 0.0f64..100.0) {
            let n = d.n_samples();
            let mut shifted = d.values().clone();
            for b in 0..n {
                if b != 0 {
                    shifted[(0, b)] += c;
                }
            }
            let shifted = DissimilarityMatrix::from_matrix(shifted, 0.01).unwrap();
            let p1 = conditional_probabilities(&d, 1.0).unwrap();
            let p2 = conditional_probabilities(&shifted, 1.0).unwrap();
            for b in 0..n {
                prop_assert!((p1.values()[(0, b)] - p2.values()[(0, b)]).abs() < 1e-12);
            }
        }

        #[test]
        fn sharper_kernel_favors_nearest(d in dist_strategy(), w in 0.1f64..2.0, dw in 0.1f64..2.0) {
            let n = d.n_samples();
            prop_assume!(n >= 3);
            let row: alloc::vec::Vec<f64> = (1..n).map(|b| d.get(0, b)).collect();
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(row.iter().filter(|&&v| v - min < 1e-3).count() == 1);
            let arg = 1 + row.iter().position(|&v| v == min).unwrap();
            let lo = conditional_probabilities(&d, w).unwrap().values()[(0, arg)];
            let hi = conditional_probabilities(&d, w + dw).unwrap().values()[(0, arg)];
            prop_assert!(hi > lo || lo == 1.0);
        }
    }
}
