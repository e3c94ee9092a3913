//! Run manifests: a JSON record of one fit.

use psne_core::{EmbeddingState, FitConfig, MetricReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Where the fitted counts came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Generator { name: String, seed: u64, rate_scale: f64 },
    File { path: String, sha256: String },
}

impl Provenance {
    pub fn from_file(path: &str, bytes: &[u8]) -> Self {
        Provenance::File { path: path.to_owned(), sha256: sha256_hex(bytes) }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: FitConfig,
    pub provenance: Provenance,
    pub n_samples: usize,
    pub n_features: usize,
    pub seconds: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub metrics: Option<MetricReport>,
}

impl RunManifest {
    pub fn new(
        config: &FitConfig,
        provenance: Provenance,
        shape: (usize, usize),
        state: &EmbeddingState,
        seconds: f64,
        metrics: Option<MetricReport>,
    ) -> Self {
        RunManifest {
            config: config.clone(),
            provenance,
            n_samples: shape.0,
            n_features: shape.1,
            seconds,
            final_cost: state.final_cost().unwrap_or(f64::NAN),
            iterations: state.iteration,
            converged: state.converged,
            metrics,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest fields are serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn json_round_trip() {
        let m = RunManifest {
            config: FitConfig { sharpness: 2.0, tolerance: 1e-8, ..Default::default() },
            provenance: Provenance::Generator { name: "angular".into(), seed: 42, rate_scale: 0.1 },
            n_samples: 60,
            n_features: 40,
            seconds: 0.123456789,
            final_cost: 0.5487123456789,
            iterations: 500,
            converged: false,
            metrics: Some(MetricReport {
                method: "p-SNE".into(),
                knn_accuracy: Some(2.0 / 3.0),
                kmeans_ari: Some(-0.01),
                spearman_abs: None,
                silhouette: Some(0.1),
            }),
        };
        assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
        let f = RunManifest { provenance: Provenance::from_file("a.csv", b"f0\n1\n"), metrics: None, ..m };
        assert_eq!(RunManifest::from_json(&f.to_json()).unwrap(), f);
    }
}
