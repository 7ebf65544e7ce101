//! Part embeddings.
//!
//! The built-in backend is a hashed TF-IDF over word unigrams, word bigrams
//! and character trigrams (2^16 buckets), followed by a seeded sparse random
//! projection down to `dim` and L2 normalization. The external backend reads
//! precomputed vectors, e.g. sentence-transformer outputs, from JSON lines.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Part;
use crate::error::{Error, Result};
use crate::seed;
use crate::text;

pub const HASH_BUCKETS: usize = 1 << 16;
pub const DEFAULT_DIM: usize = 256;
/// Non-zeros per projection column.
pub const PROJECTION_NNZ: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingBackend {
    BuiltinHash,
    ExternalFile(PathBuf),
}

/// Row-major `N x dim` matrix with one row per part id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    part_ids: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    backend_id: String,
}

impl EmbeddingMatrix {
    pub fn new(part_ids: Vec<String>, data: Vec<f64>, dim: usize, backend_id: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dim must be positive"));
        }
        if data.len() != part_ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: part_ids.len() * dim,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite embedding entry for part {}",
                part_ids[i / dim]
            )));
        }
        Ok(EmbeddingMatrix {
            part_ids,
            data,
            dim,
            backend_id: backend_id.into(),
        })
    }

    /// Builds a matrix from row vectors; all rows must share one length.
    pub fn from_rows(part_ids: Vec<String>, rows: &[Vec<f64>], backend_id: &str) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(part_ids, data, dim, backend_id)
    }

    pub fn len(&self) -> usize {
        self.part_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.part_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn part_ids(&self) -> &[String] {
        &self.part_ids
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Map from part id to row index.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.part_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    /// Matrix restricted to the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        EmbeddingMatrix {
            part_ids: rows.iter().map(|&r| self.part_ids[r].clone()).collect(),
            data,
            dim: self.dim,
            backend_id: self.backend_id.clone(),
        }
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (id, row) in self.part_ids.iter().zip(self.rows()) {
            serde_json::to_writer(
                &mut w,
                &VectorRecord {
                    part_id: id.clone(),
                    vector: row.to_vec(),
                },
            )?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads every record of a vector file, in file order.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let records = read_vector_records(path)?;
        let ids = records.iter().map(|r| r.part_id.clone()).collect();
        let rows: Vec<Vec<f64>> = records.into_iter().map(|r| r.vector).collect();
        Self::from_rows(ids, &rows, &format!("file:{}", path.display()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VectorRecord {
    part_id: String,
    vector: Vec<f64>,
}

fn read_vector_records(path: &Path) -> Result<Vec<VectorRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn embed_parts(parts: &[Part], backend: &EmbeddingBackend, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if parts.is_empty() {
        return Err(Error::invalid("no parts to embed"));
    }
    if dim == 0 {
        return Err(Error::invalid("embedding dim must be positive"));
    }
    let ids: Vec<String> = parts.iter().map(|p| p.part_id.clone()).collect();
    match backend {
        EmbeddingBackend::BuiltinHash => {
            let texts: Vec<&str> = parts.iter().map(|p| p.text.as_str()).collect();
            let data = hash_tfidf_embed(&texts, dim, seed);
            for (id, row) in ids.iter().zip(data.chunks_exact(dim)) {
                if row.iter().all(|&x| x == 0.0) {
                    log::warn!("part {id} has no embeddable content; using the zero vector");
                }
            }
            EmbeddingMatrix::new(ids, data, dim, format!("hash-tfidf:dim={dim}:seed={seed}"))
        }
        EmbeddingBackend::ExternalFile(path) => {
            let mut by_id: HashMap<String, Vec<f64>> = read_vector_records(path)?
                .into_iter()
                .map(|r| (r.part_id, r.vector))
                .collect();
            let mut data = Vec::with_capacity(ids.len() * dim);
            for id in &ids {
                let v = by_id
                    .remove(id)
                    .ok_or_else(|| Error::UnknownReference(format!("part_id {id} missing from {}", path.display())))?;
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: v.len(),
                    });
                }
                data.extend(v);
            }
            EmbeddingMatrix::new(ids, data, dim, format!("file:{}", path.display()))
        }
    }
}

/// Hashed term counts for one text, keyed by bucket.
pub(crate) fn hashed_counts(text: &str) -> BTreeMap<usize, f64> {
    let mut counts = BTreeMap::new();
    let mut add = |kind: &str, term: &str| {
        let mut key = Vec::with_capacity(kind.len() + term.len());
        key.extend_from_slice(kind.as_bytes());
        key.extend_from_slice(term.as_bytes());
        let bucket = (seed::fnv1a(&key) as usize) & (HASH_BUCKETS - 1);
        *counts.entry(bucket).or_insert(0.0) += 1.0;
    };
    let words = text::lower_tokens(text);
    for w in &words {
        add("w:", w);
    }
    for b in text::ngrams(&words, 2) {
        add("b:", &b);
    }
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut buf = String::new();
    for tri in chars.windows(3) {
        buf.clear();
        buf.extend(tri);
        add("c:", &buf);
    }
    counts
}

/// Smoothed inverse document frequency.
pub(crate) fn idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Output coordinates and signed weights of one projection column.
pub(crate) fn projection_column(bucket: usize, dim: usize, seed: u64) -> impl Iterator<Item = (usize, f64)> {
    let nnz = PROJECTION_NNZ.min(dim);
    let scale = 1.0 / (nnz as f64).sqrt();
    let base = seed::derive(seed, bucket as u64);
    (0..nnz).map(move |j| {
        let h = seed::splitmix64(base.wrapping_add(j as u64));
        let pos = (h % dim as u64) as usize;
        let sign = if h >> 63 == 1 { -scale } else { scale };
        (pos, sign)
    })
}

fn hash_tfidf_embed(texts: &[&str], dim: usize, seed: u64) -> Vec<f64> {
    let counts: Vec<BTreeMap<usize, f64>> = texts.iter().map(|t| hashed_counts(t)).collect();
    let mut df = vec![0usize; HASH_BUCKETS];
    for c in &counts {
        for &b in c.keys() {
            df[b] += 1;
        }
    }
    let n = texts.len();
    let mut data = vec![0.0; n * dim];
    for (row, c) in data.chunks_exact_mut(dim).zip(&counts) {
        for (&b, &tf) in c {
            let w = tf * idf(n, df[b]);
            for (pos, s) in projection_column(b, dim, seed) {
                row[pos] += w * s;
            }
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    data
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}
