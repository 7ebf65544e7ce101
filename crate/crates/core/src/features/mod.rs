//! Classifier inputs for a cluster: seven cluster-level features plus the
//! mean linguistic profile of the cluster's parts.

pub mod linguistic;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{Cluster, ClusterSet};
use crate::corpus::Part;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::text;

pub use linguistic::linguistic_features;

pub const CLUSTER_FEATURE_NAMES: [&str; 7] = [
    "top10_unigram_freq",
    "top10_bigram_freq",
    "top10_trigram_freq",
    "weighted_ngram_freq",
    "acs",
    "pct_unique_docs",
    "cluster_size",
];

/// Every column of the classifier input, in order.
pub fn feature_names() -> Vec<String> {
    CLUSTER_FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain(linguistic::FEATURE_NAMES.iter().map(|s| format!("ling_{s}")))
        .collect()
}

pub fn feature_dim() -> usize {
    CLUSTER_FEATURE_NAMES.len() + linguistic::DIM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeatureVector {
    pub top10_unigram_freq: f64,
    pub top10_bigram_freq: f64,
    pub top10_trigram_freq: f64,
    pub weighted_ngram_freq: f64,
    pub acs: f64,
    pub pct_unique_docs: f64,
    pub cluster_size: usize,
    pub linguistic_block: Vec<f64>,
}

impl ClusterFeatureVector {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![
            self.top10_unigram_freq,
            self.top10_bigram_freq,
            self.top10_trigram_freq,
            self.weighted_ngram_freq,
            self.acs,
            self.pct_unique_docs,
            self.cluster_size as f64,
        ];
        v.extend_from_slice(&self.linguistic_block);
        v
    }
}

/// Mean over the (up to) 10 n-grams contained in the most texts of the
/// fraction of texts containing each. Ties break lexicographically.
pub fn top10_ngram_text_frequency<S: AsRef<str>>(texts: &[S], n: usize) -> f64 {
    let grams: Vec<Vec<String>> = texts.iter().map(|t| text::ngrams(&text::lower_tokens(t.as_ref()), n)).collect();
    top10_from_grams(&grams)
}

fn top10_from_grams(grams_per_text: &[Vec<String>]) -> f64 {
    if grams_per_text.is_empty() {
        return 0.0;
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for grams in grams_per_text {
        let unique: HashSet<&str> = grams.iter().map(String::as_str).collect();
        for g in unique {
            *df.entry(g).or_default() += 1;
        }
    }
    if df.is_empty() {
        return 0.0;
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let top = &ranked[..ranked.len().min(10)];
    let total = grams_per_text.len() as f64;
    top.iter().map(|&(_, c)| c as f64 / total).sum::<f64>() / top.len() as f64
}

/// `(u + 2b + 3t) / 6`: each n-gram order weighted by n over 1 + 2 + 3.
pub fn weighted_ngram_frequency(u: f64, b: f64, t: f64) -> f64 {
    (u + 2.0 * b + 3.0 * t) / 6.0
}

/// Mean cosine similarity over all ordered pairs of distinct members.
/// Uses `sum_{i != j} cos = |sum of unit vectors|^2 - (number of non-zero
/// vectors)`, which is linear in `m`. Fewer than two vectors give 1.0.
pub fn average_cosine_similarity<V: AsRef<[f64]>>(vectors: &[V]) -> f64 {
    let m = vectors.len();
    if m < 2 {
        log::warn!("average cosine similarity of {m} vector(s) is defined as 1.0");
        return 1.0;
    }
    let dim = vectors[0].as_ref().len();
    let mut sum = vec![0.0; dim];
    let mut nonzero = 0usize;
    for v in vectors {
        let v = v.as_ref();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        nonzero += 1;
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x / norm;
        }
    }
    let sq: f64 = sum.iter().map(|x| x * x).sum();
    (sq - nonzero as f64) / (m * (m - 1)) as f64
}

/// Per-part data shared by every cluster of every experiment.
pub struct FeatureContext<'a> {
    embeddings: &'a EmbeddingMatrix,
    row_of: HashMap<&'a str, usize>,
    part_of: HashMap<&'a str, usize>,
    parts: &'a [Part],
    grams: Vec<[Vec<String>; 3]>,
    linguistic: Vec<[f64; linguistic::DIM]>,
}

impl<'a> FeatureContext<'a> {
    pub fn new(embeddings: &'a EmbeddingMatrix, parts: &'a [Part]) -> Self {
        let grams = parts
            .par_iter()
            .map(|p| {
                let toks = text::lower_tokens(&p.text);
                [text::ngrams(&toks, 1), text::ngrams(&toks, 2), text::ngrams(&toks, 3)]
            })
            .collect();
        let linguistic = parts.par_iter().map(|p| linguistic_features(&p.text)).collect();
        FeatureContext {
            embeddings,
            row_of: embeddings.index(),
            part_of: parts.iter().enumerate().map(|(i, p)| (p.part_id.as_str(), i)).collect(),
            parts,
            grams,
            linguistic,
        }
    }

    pub fn features(&self, cluster: &Cluster) -> Result<ClusterFeatureVector> {
        let ids = &cluster.part_ids;
        if ids.is_empty() {
            return Err(Error::invalid(format!(
                "cluster {}/{} is empty",
                cluster.experiment_id, cluster.cluster_id
            )));
        }
        let mut idx = Vec::with_capacity(ids.len());
        let mut rows = Vec::with_capacity(ids.len());
        for id in ids {
            let p = *self
                .part_of
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownReference(format!("part_id {id} not among the parts")))?;
            let r = *self
                .row_of
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownReference(format!("part_id {id} has no embedding")))?;
            idx.push(p);
            rows.push(self.embeddings.row(r));
        }
        let freq = |k: usize| {
            let g: Vec<Vec<String>> = idx.iter().map(|&i| self.grams[i][k].clone()).collect();
            top10_from_grams(&g)
        };
        let (u, b, t) = (freq(0), freq(1), freq(2));
        let docs: HashSet<&str> = idx.iter().map(|&i| self.parts[i].doc_id.as_str()).collect();
        let mut block = vec![0.0; linguistic::DIM];
        for &i in &idx {
            for (acc, x) in block.iter_mut().zip(&self.linguistic[i]) {
                *acc += x;
            }
        }
        block.iter_mut().for_each(|x| *x /= idx.len() as f64);
        Ok(ClusterFeatureVector {
            top10_unigram_freq: u,
            top10_bigram_freq: b,
            top10_trigram_freq: t,
            weighted_ngram_freq: weighted_ngram_frequency(u, b, t),
            acs: average_cosine_similarity(&rows),
            pct_unique_docs: docs.len() as f64 / idx.len() as f64,
            cluster_size: idx.len(),
            linguistic_block: block,
        })
    }
}

/// Features of one cluster. Builds a fresh [`FeatureContext`]; use the
/// context directly for many clusters.
pub fn cluster_features(cluster: &Cluster, embeddings: &EmbeddingMatrix, parts: &[Part]) -> Result<ClusterFeatureVector> {
    FeatureContext::new(embeddings, parts).features(cluster)
}

/// A feature row keyed by its cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub experiment_id: String,
    pub cluster_id: usize,
    pub values: Vec<f64>,
}

/// Features for every cluster of every set, in set then cluster order.
pub fn featurize_sets(sets: &[ClusterSet], ctx: &FeatureContext<'_>) -> Result<Vec<FeatureRow>> {
    let clusters: Vec<&Cluster> = sets.iter().flat_map(|s| &s.clusters).collect();
    clusters
        .par_iter()
        .map(|c| {
            Ok(FeatureRow {
                experiment_id: c.experiment_id.clone(),
                cluster_id: c.cluster_id,
                values: ctx.features(c)?.to_vec(),
            })
        })
        .collect()
}

pub fn write_features_csv(rows: &[FeatureRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["experiment_id".to_string(), "cluster_id".to_string()];
    header.extend(feature_names());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.experiment_id.clone(), r.cluster_id.to_string()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    let expected = feature_names();
    if header.len() != expected.len() + 2 || header.iter().skip(2).zip(&expected).any(|(a, b)| a != b) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "feature header does not match this build's feature order".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |m: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: m,
        };
        let cluster_id = rec[1].parse().map_err(|e| bad(format!("cluster_id: {e}")))?;
        let values = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("value {v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            experiment_id: rec[0].to_string(),
            cluster_id,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn top10_examples() {
        let same = vec!["us biolab in ukraine"; 4];
        assert_eq!(top10_ngram_text_frequency(&same, 1), 1.0);
        assert_eq!(top10_ngram_text_frequency(&["a b", "c d"], 2), 0.5);
        assert_eq!(top10_ngram_text_frequency(&["one two three four"], 3), 1.0);
        assert_eq!(top10_ngram_text_frequency(&["one two"], 3), 0.0);
    }

    #[test]
    fn top10_breaks_ties_lexicographically() {
        // 12 unigrams each in one of two texts, "z" in both: top is z then a..i.
        let texts = ["z a b c d e f", "z g h i j k l"];
        let expected = (1.0 + 9.0 * 0.5) / 10.0;
        assert_abs_diff_eq!(top10_ngram_text_frequency(&texts, 1), expected, epsilon = 1e-15);
    }

    #[test]
    fn weighted_examples() {
        assert_eq!(weighted_ngram_frequency(1.0, 1.0, 1.0), 1.0);
        assert_eq!(weighted_ngram_frequency(0.0, 0.0, 0.0), 0.0);
        assert_abs_diff_eq!(weighted_ngram_frequency(0.6, 0.3, 0.1), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn acs_examples() {
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(average_cosine_similarity(&[[1.0, 0.0], [0.0, 1.0], [s, s]]), 0.4714, epsilon = 1e-4);
        assert_abs_diff_eq!(average_cosine_similarity(&[[1.0, 0.0], [0.0, 1.0]]), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(average_cosine_similarity(&[[0.6, 0.8]; 5]), 1.0, epsilon = 1e-12);
        assert_eq!(average_cosine_similarity(&[[3.0, 1.0]]), 1.0);
    }
}
