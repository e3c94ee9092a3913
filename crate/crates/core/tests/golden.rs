//! Values pinned from the first verified run with seed 42.

use psne_core::geometry::squared_euclidean_matrix;
use psne_core::{
    evaluation, fit, fit_dissimilarity, generate_angular, generate_sparse_sequential, FitConfig, GeneratorConfig,
};

#[test]
fn sparse_sequential_row_count() {
    let data = generate_sparse_sequential(&GeneratorConfig::sparse_sequential()).unwrap();
    assert_eq!(data.counts.n_samples(), 117);
    assert_eq!(data.removed, vec![69, 78, 111]);
    assert_eq!(data.counts.n_features(), 30);
}

#[test]
fn angular_zero_fraction() {
    let data = generate_angular(&GeneratorConfig::angular()).unwrap();
    assert_eq!(data.counts.values().iter().filter(|&&c| c == 0).count(), 455);
}

#[test]
fn angular_knn_accuracies() {
    let data = generate_angular(&GeneratorConfig::angular()).unwrap();
    let config = FitConfig::default();
    let (state, _) = fit(&data.counts, &config).unwrap();
    assert_eq!(state.iteration, 500);
    assert!(!state.converged);
    let knn = evaluation::knn_accuracy(&state.x, &data.group, 5).unwrap();
    assert_eq!((knn * 60.0).round() as usize, 41);
    let (euclid, _) = fit_dissimilarity(&squared_euclidean_matrix(&data.counts), &config).unwrap();
    let knn_euclid = evaluation::knn_accuracy(&euclid.x, &data.group, 5).unwrap();
    assert_eq!((knn_euclid * 60.0).round() as usize, 37);
    assert!((state.final_cost().unwrap() - 0.548698).abs() < 1e-6);
}
