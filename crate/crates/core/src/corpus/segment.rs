//! Rule-based sentence segmentation.
//!
//! A boundary is a run of `.`, `!` or `?` (optionally followed by closing
//! quotes or brackets), then whitespace, then an uppercase letter, digit, or
//! opening quote/bracket. A lone `.` does not end a sentence when the word it
//! closes is in `data/abbreviations.txt`.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::{Document, Granularity, Part};

static ABBREVIATIONS_RAW: &str = include_str!("../../data/abbreviations.txt");

fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS_RAW
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201C}' | '\u{2018}')
}

/// The whole document as one part.
pub fn segment_whole(doc: &Document) -> Part {
    Part {
        part_id: format!("{}#d", doc.doc_id),
        doc_id: doc.doc_id.clone(),
        granularity: Granularity::WholeDoc,
        char_start: 0,
        char_end: doc.text.chars().count(),
        text: doc.text.clone(),
    }
}

/// Splits a document into trimmed, ordered, non-overlapping sentence parts.
/// Text with no detectable boundary yields a single part.
pub fn segment_sentences(doc: &Document) -> Vec<Part> {
    let chars: Vec<char> = doc.text.chars().collect();
    let spans = sentence_spans(&chars);
    spans
        .into_iter()
        .enumerate()
        .map(|(i, (s, e))| Part {
            part_id: format!("{}#s{}", doc.doc_id, i),
            doc_id: doc.doc_id.clone(),
            granularity: Granularity::Sentence,
            char_start: s,
            char_end: e,
            text: chars[s..e].iter().collect(),
        })
        .collect()
}

/// Sentence texts of a raw string, by the same rules as [`segment_sentences`].
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    sentence_spans(&chars)
        .into_iter()
        .map(|(s, e)| chars[s..e].iter().collect())
        .collect()
}

fn sentence_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < n {
        if !is_terminal(chars[i]) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut j = i;
        while j < n && is_terminal(chars[j]) {
            j += 1;
        }
        let run_end = j;
        while j < n && is_closer(chars[j]) {
            j += 1;
        }
        if j >= n {
            break;
        }
        if !chars[j].is_whitespace() {
            i = j.max(i + 1);
            continue;
        }
        let mut k = j;
        while k < n && chars[k].is_whitespace() {
            k += 1;
        }
        if k >= n {
            break;
        }
        let next = chars[k];
        let starts_sentence = next.is_uppercase() || next.is_ascii_digit() || is_opener(next);
        let single_period = run_end - run_start == 1 && chars[run_start] == '.';
        if starts_sentence && !(single_period && closes_abbreviation(chars, start, run_start)) {
            push_trimmed(chars, start, j, &mut spans);
            start = k;
        }
        i = k;
    }
    push_trimmed(chars, start, n, &mut spans);
    spans
}

/// Whether the word ending with the period at `period` is a known abbreviation.
fn closes_abbreviation(chars: &[char], floor: usize, period: usize) -> bool {
    let mut w = period;
    while w > floor && !chars[w - 1].is_whitespace() {
        w -= 1;
    }
    while w < period && is_opener(chars[w]) {
        w += 1;
    }
    let word: String = chars[w..=period].iter().collect();
    abbreviations().contains(word.as_str())
}

fn push_trimmed(chars: &[char], mut s: usize, mut e: usize, out: &mut Vec<(usize, usize)>) {
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    if s < e {
        out.push((s, e));
    }
}
