//! Embedding quality metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Metrics for one embedding. A field is `None` when the inputs needed for it
/// were not provided.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub method: String,
    pub knn_accuracy: Option<f64>,
    pub kmeans_ari: Option<f64>,
    pub spearman_abs: Option<f64>,
    pub silhouette: Option<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_labels(x: &Matrix, labels: &[usize]) -> Result<()> {
    if labels.len() != x.rows() {
        return Err(Error::shape(format!("{} labels for {} samples", labels.len(), x.rows())));
    }
    Ok(())
}

fn n_distinct(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Leave-one-out k-nearest-neighbor accuracy with Euclidean distances.
///
/// Distance ties go to the smaller sample index. Vote ties go to the label of
/// the nearest neighbor among the tied labels.
pub fn knn_accuracy(x: &Matrix, labels: &[usize], k: usize) -> Result<f64> {
    check_labels(x, labels)?;
    let n = x.rows();
    if k < 1 || k >= n {
        return Err(Error::domain(format!("k must satisfy 1 <= k < N = {n}, got {k}")));
    }
    if n_distinct(labels) < 2 {
        return Err(Error::Degenerate("kNN accuracy needs at least 2 classes".into()));
    }
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut correct = 0usize;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let mut votes = vec![0usize; n_labels];
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(x.row(i), x.row(j)), j)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        votes.iter_mut().for_each(|v| *v = 0);
        for &(_, j) in &order[..k] {
            votes[labels[j]] += 1;
        }
        let best = *votes.iter().max().unwrap();
        let predicted = order[..k].iter().map(|&(_, j)| labels[j]).find(|&l| votes[l] == best).unwrap();
        if predicted == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / n as f64)
}

/// Lloyd's k-means with k-means++ seeding. Returns `(assignment, inertia)`
/// of the best of `restarts` runs.
pub fn kmeans(x: &Matrix, n_clusters: usize, restarts: usize, seed: u64) -> Result<(Vec<usize>, f64)> {
    let (n, dim) = x.shape();
    if n_clusters < 2 {
        return Err(Error::domain("need at least 2 clusters"));
    }
    if n < n_clusters {
        return Err(Error::domain(format!("{n} samples cannot form {n_clusters} clusters")));
    }
    let mut gen = rng::generator(seed, rng::STREAM_KMEANS);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        // k-means++ seeding
        let mut centers = Matrix::zeros(n_clusters, dim);
        let first = gen.random_range(0..n);
        centers.row_mut(0).copy_from_slice(x.row(first));
        let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
        for c in 1..n_clusters {
            let total: f64 = d2.iter().sum();
            let pick = if total > 0.0 {
                let mut r = gen.random::<f64>() * total;
                let mut idx = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if r < w {
                        idx = i;
                        break;
                    }
                    r -= w;
                }
                idx
            } else {
                gen.random_range(0..n)
            };
            centers.row_mut(c).copy_from_slice(x.row(pick));
            for (i, d) in d2.iter_mut().enumerate() {
                *d = d.min(sq_dist(x.row(i), centers.row(c)));
            }
        }

        let mut assign = vec![usize::MAX; n];
        for _ in 0..300 {
            let mut changed = false;
            for (i, slot) in assign.iter_mut().enumerate() {
                let nearest = (0..n_clusters)
                    .map(|c| (sq_dist(x.row(i), centers.row(c)), c))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .unwrap()
                    .1;
                if *slot != nearest {
                    *slot = nearest;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let mut sums = Matrix::zeros(n_clusters, dim);
            let mut sizes = vec![0usize; n_clusters];
            for i in 0..n {
                sizes[assign[i]] += 1;
                for (s, v) in sums.row_mut(assign[i]).iter_mut().zip(x.row(i)) {
                    *s += v;
                }
            }
            for (c, &size) in sizes.iter().enumerate() {
                // empty clusters keep their previous center
                if size > 0 {
                    for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                        *dst = s / size as f64;
                    }
                }
            }
        }
        let inertia: f64 = (0..n).map(|i| sq_dist(x.row(i), centers.row(assign[i]))).sum();
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((assign, inertia));
        }
    }
    Ok(best.unwrap())
}

fn choose2(v: usize) -> f64 {
    let v = v as f64;
    v * (v - 1.0) / 2.0
}

/// Adjusted Rand Index between two partitions, from the contingency table.
/// Two identical trivial partitions score 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("partitions of {} and {} samples", a.len(), b.len())));
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0usize; ka * kb];
    for (&i, &j) in a.iter().zip(b) {
        table[i * kb + j] += 1;
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let rows: f64 = (0..ka).map(|i| choose2((0..kb).map(|j| table[i * kb + j]).sum())).sum();
    let cols: f64 = (0..kb).map(|j| choose2((0..ka).map(|i| table[i * kb + j]).sum())).sum();
    let total = choose2(a.len());
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// k-means (10 restarts, best inertia) on the embedding, scored against the
/// true labels with the Adjusted Rand Index.
pub fn kmeans_ari(x: &Matrix, labels: &[usize], n_clusters: usize, seed: u64) -> Result<f64> {
    check_labels(x, labels)?;
    let (assign, _) = kmeans(x, n_clusters, 10, seed)?;
    adjusted_rand_index(&assign, labels)
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / libm::sqrt(va * vb)
}

/// Spearman correlation of two samples. Constant input gives 0.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Largest absolute Spearman correlation between any embedding dimension and `t`.
pub fn spearman_abs(x: &Matrix, t: &[f64]) -> Result<f64> {
    if t.len() != x.rows() {
        return Err(Error::shape(format!("{} manifold values for {} samples", t.len(), x.rows())));
    }
    if x.rows() < 3 {
        return Err(Error::domain("Spearman correlation needs at least 3 samples"));
    }
    Ok((0..x.cols()).map(|p| libm::fabs(spearman(&x.column(p), t))).fold(0.0, f64::max))
}

/// Mean silhouette coefficient with Euclidean distances.
///
/// Samples in singleton classes score 0, and a sample with `a = b = 0`
/// scores 0.
pub fn silhouette(x: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(x, labels)?;
    if n_distinct(labels) < 2 {
        return Err(Error::Degenerate("silhouette needs at least 2 classes".into()));
    }
    let n = x.rows();
    let n_labels = labels.iter().max().unwrap() + 1;
    let mut sizes = vec![0usize; n_labels];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; n_labels];
    for i in 0..n {
        if sizes[labels[i]] < 2 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[labels[j]] += libm::sqrt(sq_dist(x.row(i), x.row(j)));
            }
        }
        let own = labels[i];
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..n_labels)
            .filter(|&l| l != own && sizes[l] > 0)
            .map(|l| sums[l] / sizes[l] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Fills in whichever metrics the provided inputs allow.
pub fn evaluate(
    method: &str,
    x: &Matrix,
    labels: Option<&[usize]>,
    manifold_t: Option<&[f64]>,
    k: usize,
    seed: u64,
) -> Result<MetricReport> {
    let mut report = MetricReport { method: method.into(), ..Default::default() };
    if let Some(labels) = labels {
        let classes = n_distinct(labels);
        report.knn_accuracy = Some(knn_accuracy(x, labels, k)?);
        report.kmeans_ari = Some(kmeans_ari(x, labels, classes, seed)?);
        report.silhouette = Some(silhouette(x, labels)?);
    }
    if let Some(t) = manifold_t {
        report.spearman_abs = Some(spearman_abs(x, t)?);
    }
    Ok(report)
}
