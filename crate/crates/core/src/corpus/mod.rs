//! Labeled documents, their parts, and train/test splitting.

mod segment;
mod spans;

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use segment::{segment_sentences, segment_whole, split_sentences};
pub use spans::{ingest_belief_spans, BeliefSpanRecord, Factuality, SpanFilter, SpanSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Media {
    Twitter,
    Forum,
    News,
    Blog,
    Reddit,
    Other,
}

impl Media {
    pub const ALL: [Media; 6] = [
        Media::Twitter,
        Media::Forum,
        Media::News,
        Media::Blog,
        Media::Reddit,
        Media::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Media::Twitter => "Twitter",
            Media::Forum => "Forum",
            Media::News => "News",
            Media::Blog => "Blog",
            Media::Reddit => "Reddit",
            Media::Other => "Other",
        }
    }
}

impl fmt::Display for Media {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub media: Media,
    pub text: String,
    pub label: bool,
    #[serde(default)]
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Granularity {
    WholeDoc,
    Sentence,
    TargetAll,
    #[serde(rename = "TargetAT")]
    TargetAt,
}

impl Granularity {
    pub fn cli_name(self) -> &'static str {
        match self {
            Granularity::WholeDoc => "doc",
            Granularity::Sentence => "sentence",
            Granularity::TargetAll => "target-all",
            Granularity::TargetAt => "target-at",
        }
    }

    pub fn needs_spans(self) -> bool {
        matches!(self, Granularity::TargetAll | Granularity::TargetAt)
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doc" => Ok(Granularity::WholeDoc),
            "sentence" => Ok(Granularity::Sentence),
            "target-all" => Ok(Granularity::TargetAll),
            "target-at" => Ok(Granularity::TargetAt),
            other => Err(Error::invalid(format!("unknown granularity: {other}"))),
        }
    }
}

/// A contiguous span of a document. Offsets count Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub part_id: String,
    pub doc_id: String,
    pub granularity: Granularity,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

/// An ordered, id-indexed document collection.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut index = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if d.text.trim().is_empty() {
                return Err(Error::invalid(format!("document {} has empty text", d.doc_id)));
            }
            if index.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId(d.doc_id.clone()));
            }
        }
        Ok(Corpus { docs, index })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.iter()
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.docs.iter().filter(move |d| d.split == split)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for d in &self.docs {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    JsonLines,
}

/// Reads a JSON-lines corpus. Blank lines are skipped.
pub fn ingest_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let CorpusFormat::JsonLines = format;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        if doc.text.trim().is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("document {} has empty text", doc.doc_id),
            });
        }
        if seen.insert(doc.doc_id.clone(), lineno).is_some() {
            return Err(Error::DuplicateDocId(doc.doc_id));
        }
        docs.push(doc);
    }
    if docs.is_empty() {
        log::warn!("{}: corpus is empty", path.display());
    }
    Corpus::new(docs)
}

/// Assigns a document-level random split with `round(ratio * N)` training
/// documents. The assignment depends only on the set of ids, the ratio and
/// the seed, not on input order.
pub fn split_corpus(corpus: &Corpus, ratio: f64, seed: u64) -> Result<Corpus> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let mut ids: Vec<&str> = corpus.docs.iter().map(|d| d.doc_id.as_str()).collect();
    ids.sort_unstable();
    ids.shuffle(&mut seed::rng(seed));
    let n_train = (ratio * ids.len() as f64).round() as usize;
    let train: std::collections::HashSet<&str> = ids[..n_train].iter().copied().collect();
    let docs = corpus
        .docs
        .iter()
        .map(|d| Document {
            split: if train.contains(d.doc_id.as_str()) {
                Split::Train
            } else {
                Split::Test
            },
            ..d.clone()
        })
        .collect();
    Corpus::new(docs)
}

/// Segments every document at the given granularity. Target granularities
/// read their spans from the sidecar at `spans`.
pub fn segment_corpus(
    corpus: &Corpus,
    granularity: Granularity,
    spans: Option<&Path>,
) -> Result<Vec<Part>> {
    match granularity {
        Granularity::WholeDoc => Ok(corpus.iter().map(segment_whole).collect()),
        Granularity::Sentence => Ok(corpus.iter().flat_map(segment_sentences).collect()),
        Granularity::TargetAll | Granularity::TargetAt => {
            let path = spans.ok_or_else(|| {
                Error::invalid(format!(
                    "granularity {} requires a belief-span file",
                    granularity.cli_name()
                ))
            })?;
            let filter = if granularity == Granularity::TargetAll {
                SpanFilter::AllTargets
            } else {
                SpanFilter::AuthorTrueOnly
            };
            ingest_belief_spans(corpus, path, filter)
        }
    }
}

pub fn write_parts_jsonl(parts: &[Part], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in parts {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_parts_jsonl(path: &Path) -> Result<Vec<Part>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut parts = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        parts.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(parts)
}
