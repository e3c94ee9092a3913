//! Nonlinear neighbor embedding for sparse count data.
//!
//! Pairwise dissimilarities between samples are sums of per-feature Poisson
//! KL divergences. They are turned into a symmetric joint distribution over
//! sample pairs, and a low-dimensional embedding is fitted by minimizing the
//! Hellinger distance between that distribution and a Student-t kernel
//! distribution over the embedded points.
//!
//! The crate is `no_std` and only needs `alloc`. All transcendental functions
//! go through [`libm`] so results are identical across targets.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod affinity;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod matrix;
pub mod optimizer;
pub mod rng;
pub mod synthetic;
pub mod verification;

pub use affinity::{conditional_probabilities, exaggerate, symmetrize, AffinityMatrix, ConditionalMatrix};
pub use error::{Error, Result};
pub use evaluation::{kmeans_ari, knn_accuracy, silhouette, spearman_abs, MetricReport};
pub use geometry::{dissimilarity_matrix, poisson_kl, CountMatrix, DissimilarityMatrix};
pub use matrix::Matrix;
pub use optimizer::{fit, fit_dissimilarity, EmbeddingState, FitConfig, KernelMatrix};
pub use synthetic::{generate_angular, generate_sparse_sequential, rescale_rates, GeneratorConfig, LabeledDataset};
