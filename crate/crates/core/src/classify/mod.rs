//! Binary classifiers over cluster feature vectors.

pub mod fnn;
pub mod gbdt;

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use fnn::{train_fnn, FnnModel, FnnParams};
pub use gbdt::{train_gbdt, GbdtModel, GbdtParams};

/// Version of the persisted model JSON layout.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub features: Vec<f64>,
    pub label: bool,
    pub weight: f64,
}

impl TrainingExample {
    pub fn new(features: Vec<f64>, label: bool) -> Self {
        TrainingExample {
            features,
            label,
            weight: 1.0,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Checks shape, finiteness, weights and class balance; returns the feature
/// dimension.
pub(crate) fn validate(examples: &[TrainingExample], min: usize) -> Result<usize> {
    if examples.len() < min {
        return Err(Error::invalid(format!(
            "need at least {min} training examples, got {}",
            examples.len()
        )));
    }
    let d = examples[0].features.len();
    for (i, e) in examples.iter().enumerate() {
        if e.features.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: e.features.len(),
            });
        }
        if e.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("training example {i} has a non-finite feature")));
        }
        if !(e.weight.is_finite() && e.weight > 0.0) {
            return Err(Error::invalid(format!("training example {i} has non-positive weight")));
        }
    }
    let pos = examples.iter().filter(|e| e.label).count();
    if pos == 0 || pos == examples.len() {
        return Err(Error::invalid("training data contains a single class"));
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Gbdt,
    Fnn,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Gbdt => "gbdt",
            Backend::Fnn => "fnn",
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gbdt" => Ok(Backend::Gbdt),
            "fnn" => Ok(Backend::Fnn),
            other => Err(Error::invalid(format!("unknown classifier backend: {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum Model {
    Gbdt(GbdtModel),
    Fnn(FnnModel),
}

impl Model {
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Gbdt(m) => m.predict_proba(x),
            Model::Fnn(m) => m.predict_proba(x),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Gbdt(m) => m.n_features,
            Model::Fnn(m) => m.n_features(),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            Model::Gbdt(_) => Backend::Gbdt,
            Model::Fnn(_) => Backend::Fnn,
        }
    }

    pub fn save(&self, path: &Path, feature_names: &[String]) -> Result<()> {
        let doc = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            feature_names: feature_names.to_vec(),
            model: self.clone(),
        };
        let s = serde_json::to_string_pretty(&doc)?;
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    /// Loads a model and the feature names it was trained on.
    pub fn load(path: &Path) -> Result<(Model, Vec<String>)> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ModelFile = serde_json::from_str(&s).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{}: model schema version {} is not supported (expected {MODEL_SCHEMA_VERSION})",
                path.display(),
                doc.schema_version
            )));
        }
        Ok((doc.model, doc.feature_names))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    feature_names: Vec<String>,
    model: Model,
}

/// Trains the model for evaluation run `run_index` (1-based): GBDT uses
/// `max_depth = run_index`; the FNN keeps one validation split for all runs
/// and varies its initialization seed by run.
pub fn train_for_run(backend: Backend, examples: &[TrainingExample], run_index: usize, base_seed: u64) -> Result<Model> {
    if run_index == 0 {
        return Err(Error::invalid("run index is 1-based"));
    }
    let run_seed = seed::derive(base_seed, run_index as u64);
    match backend {
        Backend::Gbdt => {
            let params = GbdtParams {
                max_depth: run_index,
                ..Default::default()
            };
            train_gbdt(examples, params, run_seed).map(Model::Gbdt)
        }
        Backend::Fnn => train_fnn(examples, &FnnParams::default(), base_seed, run_seed).map(Model::Fnn),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        let ok = TrainingExample::new(vec![1.0], true);
        let neg = TrainingExample::new(vec![0.0], false);
        assert!(validate(&[ok.clone(), neg.clone()], 2).is_ok());
        assert!(validate(&[ok.clone(), ok.clone()], 2).is_err());
        assert!(validate(std::slice::from_ref(&ok), 2).is_err());
        let bad = TrainingExample::new(vec![f64::NAN], false);
        assert!(validate(&[ok.clone(), bad], 2).is_err());
        let wide = TrainingExample::new(vec![0.0, 1.0], false);
        assert!(validate(&[ok, wide], 2).is_err());
    }

    #[test]
    fn model_file_roundtrip() {
        let data: Vec<_> = (0..6).map(|i| TrainingExample::new(vec![i as f64, 1.0], i % 2 == 0)).collect();
        let m = train_for_run(Backend::Gbdt, &data, 2, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let names = vec!["a".to_string(), "b".to_string()];
        m.save(&p, &names).unwrap();
        let (back, back_names) = Model::load(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back_names, names);
        let text = fs::read_to_string(&p).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 99");
        fs::write(&p, text).unwrap();
        assert!(Model::load(&p).is_err());
    }
}
