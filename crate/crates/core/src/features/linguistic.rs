//! Surface linguistic features of a text.
//!
//! Non-lexical by construction: counts of punctuation, casing, and closed
//! word classes (lists under `data/wordlists/`). Rates are per 100 tokens
//! unless the name says otherwise. The order of [`FEATURE_NAMES`] is part of
//! the model input contract and is versioned by [`SPEC_VERSION`].

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::corpus::split_sentences;
use crate::text;

pub const SPEC_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; 27] = [
    "mean_word_length",
    "type_token_ratio",
    "num_words",
    "sentence_count",
    "mean_sentence_length",
    "period_rate",
    "comma_rate",
    "exclamation_rate",
    "question_rate",
    "quote_rate",
    "digit_word_rate",
    "capitalized_word_rate",
    "contraction_rate",
    "first_person_rate",
    "second_person_rate",
    "third_person_rate",
    "modal_rate",
    "negation_rate",
    "conjunction_rate",
    "preposition_rate",
    "question_final_fraction",
    "url_rate",
    "hashtag_rate",
    "mention_rate",
    "all_caps_rate",
    "stopword_rate",
    "hapax_rate",
];

pub const DIM: usize = FEATURE_NAMES.len();

struct WordLists {
    first: HashSet<&'static str>,
    second: HashSet<&'static str>,
    third: HashSet<&'static str>,
    modals: HashSet<&'static str>,
    negations: HashSet<&'static str>,
    conjunctions: HashSet<&'static str>,
    prepositions: HashSet<&'static str>,
    stopwords: HashSet<&'static str>,
}

fn parse(raw: &'static str) -> HashSet<&'static str> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn lists() -> &'static WordLists {
    static LISTS: OnceLock<WordLists> = OnceLock::new();
    LISTS.get_or_init(|| WordLists {
        first: parse(include_str!("../../data/wordlists/pronouns_first.txt")),
        second: parse(include_str!("../../data/wordlists/pronouns_second.txt")),
        third: parse(include_str!("../../data/wordlists/pronouns_third.txt")),
        modals: parse(include_str!("../../data/wordlists/modals.txt")),
        negations: parse(include_str!("../../data/wordlists/negations.txt")),
        conjunctions: parse(include_str!("../../data/wordlists/conjunctions.txt")),
        prepositions: parse(include_str!("../../data/wordlists/prepositions.txt")),
        stopwords: parse(include_str!("../../data/wordlists/stopwords.txt")),
    })
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// A token with an apostrophe between two letters, e.g. `can't`, `it's`.
fn is_contraction(tok: &str) -> bool {
    let chars: Vec<char> = tok.chars().collect();
    chars
        .windows(3)
        .any(|w| w[0].is_alphabetic() && is_apostrophe(w[1]) && w[2].is_alphabetic())
}

fn normalize_apostrophes(tok: &str) -> String {
    tok.chars().map(|c| if is_apostrophe(c) { '\'' } else { c }).collect()
}

/// Feature vector in [`FEATURE_NAMES`] order; all zeros for text without
/// tokens.
pub fn linguistic_features(input: &str) -> [f64; DIM] {
    let mut f = [0.0; DIM];
    let toks = text::tokens(input);
    if toks.is_empty() {
        return f;
    }
    let wl = lists();
    let n = toks.len() as f64;
    let per100 = |count: usize| count as f64 * 100.0 / n;
    let lower: Vec<String> = toks.iter().map(|t| normalize_apostrophes(&t.to_lowercase())).collect();
    let sentences = split_sentences(input);
    let n_sent = sentences.len().max(1);

    let mut freq: HashMap<&str, usize> = HashMap::new();
    for t in &lower {
        *freq.entry(t.as_str()).or_default() += 1;
    }
    let count_in = |set: &HashSet<&str>| lower.iter().filter(|t| set.contains(t.as_str())).count();
    let count_char = |c: char| input.chars().filter(|&x| x == c).count();
    let chunks: Vec<&str> = input.split_whitespace().collect();
    let count_chunks = |pred: &dyn Fn(&str) -> bool| chunks.iter().filter(|c| pred(c)).count();

    f[0] = toks.iter().map(|t| t.chars().count()).sum::<usize>() as f64 / n;
    f[1] = freq.len() as f64 / n;
    f[2] = n;
    f[3] = n_sent as f64;
    f[4] = n / n_sent as f64;
    f[5] = per100(count_char('.'));
    f[6] = per100(count_char(','));
    f[7] = per100(count_char('!'));
    f[8] = per100(count_char('?'));
    f[9] = per100(
        input
            .chars()
            .filter(|&c| matches!(c, '"' | '\u{201C}' | '\u{201D}'))
            .count(),
    );
    f[10] = per100(toks.iter().filter(|t| t.chars().any(|c| c.is_ascii_digit())).count());
    f[11] = per100(toks.iter().filter(|t| t.chars().next().is_some_and(char::is_uppercase)).count());
    f[12] = per100(toks.iter().filter(|t| is_contraction(t)).count());
    f[13] = per100(count_in(&wl.first));
    f[14] = per100(count_in(&wl.second));
    f[15] = per100(count_in(&wl.third));
    f[16] = per100(count_in(&wl.modals));
    f[17] = per100(
        lower
            .iter()
            .filter(|t| wl.negations.contains(t.as_str()) || t.ends_with("n't"))
            .count(),
    );
    f[18] = per100(count_in(&wl.conjunctions));
    f[19] = per100(count_in(&wl.prepositions));
    f[20] = sentences
        .iter()
        .filter(|s| s.trim_end_matches(['"', ')', '\u{201D}']).ends_with('?'))
        .count() as f64
        / n_sent as f64;
    f[21] = per100(count_chunks(&|c| {
        let l = c.to_ascii_lowercase();
        l.starts_with("http://") || l.starts_with("https://") || l.starts_with("www.")
    }));
    f[22] = per100(count_chunks(&|c| {
        c.strip_prefix('#').and_then(|r| r.chars().next()).is_some_and(char::is_alphanumeric)
    }));
    f[23] = per100(count_chunks(&|c| {
        c.strip_prefix('@').and_then(|r| r.chars().next()).is_some_and(char::is_alphanumeric)
    }));
    f[24] = per100(
        toks.iter()
            .filter(|t| {
                let letters: Vec<char> = t.chars().filter(|c| c.is_alphabetic()).collect();
                letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
            })
            .count(),
    );
    f[25] = per100(count_in(&wl.stopwords));
    f[26] = per100(freq.values().filter(|&&c| c == 1).count());
    f
}
