//! Belief-target spans ingested from a sidecar file.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Granularity, Part};
use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanSource {
    Author,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factuality {
    #[serde(rename = "CB")]
    CommittedBelief,
    #[serde(rename = "PB")]
    PossibleBelief,
    #[serde(rename = "UU")]
    Unknown,
    #[serde(rename = "PD")]
    PossibleDisbelief,
    #[serde(rename = "CD")]
    CommittedDisbelief,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefSpanRecord {
    pub doc_id: String,
    pub char_start: usize,
    pub char_end: usize,
    pub source: SpanSource,
    pub factuality: Factuality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanFilter {
    AllTargets,
    /// Spans the author holds as committed belief.
    AuthorTrueOnly,
}

impl BeliefSpanRecord {
    pub fn author_true(&self) -> bool {
        self.source == SpanSource::Author && self.factuality == Factuality::CommittedBelief
    }
}

/// Reads a belief-span sidecar and turns the retained records into parts.
///
/// Every record is validated, including ones the filter drops. Part ids are
/// `<doc_id>#t<line>`, so the author-true parts of a sidecar carry the same
/// ids as in the all-targets view.
pub fn ingest_belief_spans(corpus: &Corpus, path: &Path, filter: SpanFilter) -> Result<Vec<Part>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let granularity = match filter {
        SpanFilter::AllTargets => Granularity::TargetAll,
        SpanFilter::AuthorTrueOnly => Granularity::TargetAt,
    };
    let mut parts = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let rec: BeliefSpanRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let doc = corpus
            .get(&rec.doc_id)
            .ok_or_else(|| parse_err(format!("unknown doc_id {}", rec.doc_id)))?;
        if rec.char_start >= rec.char_end {
            return Err(parse_err(format!(
                "empty or inverted span [{}, {}) in {}",
                rec.char_start, rec.char_end, rec.doc_id
            )));
        }
        let span = text::char_slice(&doc.text, rec.char_start, rec.char_end).ok_or_else(|| {
            parse_err(format!(
                "span [{}, {}) out of bounds for {} (length {})",
                rec.char_start,
                rec.char_end,
                rec.doc_id,
                doc.text.chars().count()
            ))
        })?;
        if filter == SpanFilter::AuthorTrueOnly && !rec.author_true() {
            continue;
        }
        parts.push(Part {
            part_id: format!("{}#t{}", rec.doc_id, lineno),
            doc_id: rec.doc_id,
            granularity,
            char_start: rec.char_start,
            char_end: rec.char_end,
            text: span.to_string(),
        });
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Media, Split};
    use std::io::Write;

    fn corpus() -> Corpus {
        Corpus::new(vec![Document {
            doc_id: "a".into(),
            media: Media::News,
            text: "The lab makes weapons. Officials deny it.".into(),
            label: true,
            split: Split::Train,
        }])
        .unwrap()
    }

    fn sidecar(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    const FIVE: [&str; 5] = [
        r#"{"doc_id":"a","char_start":4,"char_end":21,"source":"author","factuality":"CB"}"#,
        r#"{"doc_id":"a","char_start":8,"char_end":21,"source":"other","factuality":"CB"}"#,
        r#"{"doc_id":"a","char_start":23,"char_end":40,"source":"author","factuality":"PB"}"#,
        r#"{"doc_id":"a","char_start":33,"char_end":40,"source":"author","factuality":"CB"}"#,
        r#"{"doc_id":"a","char_start":0,"char_end":3,"source":"other","factuality":"UU"}"#,
    ];

    #[test]
    fn filter_semantics() {
        let f = sidecar(&FIVE);
        let at = ingest_belief_spans(&corpus(), f.path(), SpanFilter::AuthorTrueOnly).unwrap();
        assert_eq!(at.len(), 2);
        assert!(at.iter().all(|p| p.granularity == Granularity::TargetAt));
        assert_eq!(at[0].text, "lab makes weapons");
        assert_eq!(at[1].text, "deny it");

        let all = ingest_belief_spans(&corpus(), f.path(), SpanFilter::AllTargets).unwrap();
        assert_eq!(all.len(), 5);
        let ids: Vec<_> = all.iter().map(|p| &p.part_id).collect();
        assert!(at.iter().all(|p| ids.contains(&&p.part_id)));
    }

    #[test]
    fn out_of_bounds_span_is_rejected() {
        let f = sidecar(&[
            FIVE[0],
            r#"{"doc_id":"a","char_start":30,"char_end":99,"source":"author","factuality":"CB"}"#,
        ]);
        match ingest_belief_spans(&corpus(), f.path(), SpanFilter::AllTargets).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("out of bounds"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_doc_is_rejected() {
        let f = sidecar(&[
            r#"{"doc_id":"zz","char_start":0,"char_end":3,"source":"author","factuality":"CB"}"#,
        ]);
        let err = ingest_belief_spans(&corpus(), f.path(), SpanFilter::AuthorTrueOnly).unwrap_err();
        assert!(err.to_string().contains("unknown doc_id zz"));
    }
}
