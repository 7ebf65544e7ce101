//! Word tokenization shared by embedding, n-gram features and linguistic
//! features.
//!
//! A token is a whitespace-separated chunk with leading and trailing
//! punctuation stripped. Chunks that are pure punctuation produce no token.
//! Inner punctuation is kept, so `can't`, `U.S` and `covid-19` stay whole.

/// Raw tokens with original casing.
pub fn tokens(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(strip_punct)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Lowercased tokens, the form used for n-grams.
pub fn lower_tokens(text: &str) -> Vec<String> {
    tokens(text).into_iter().map(str::to_lowercase).collect()
}

fn strip_punct(chunk: &str) -> &str {
    chunk.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Space-joined n-grams over a token sequence.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// Byte offset of the `index`-th character, or `text.len()` past the end.
pub fn char_to_byte(text: &str, index: usize) -> Option<usize> {
    if index == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in text.char_indices() {
        if count == index {
            return Some(b);
        }
        count += 1;
    }
    (count == index).then_some(text.len())
}

/// Substring by character offsets `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let b0 = char_to_byte(text, start)?;
    let b1 = char_to_byte(text, end)?;
    Some(&text[b0..b1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_edge_punctuation_only() {
        assert_eq!(
            tokens("\"Hello,\" she said -- can't stop (U.S.)!"),
            vec!["Hello", "she", "said", "can't", "stop", "U.S"]
        );
    }

    #[test]
    fn lower_and_ngrams() {
        let t = lower_tokens("US Biolab in Ukraine.");
        assert_eq!(t, vec!["us", "biolab", "in", "ukraine"]);
        assert_eq!(ngrams(&t, 2), vec!["us biolab", "biolab in", "in ukraine"]);
        assert!(ngrams(&t, 5).is_empty());
    }

    #[test]
    fn char_offsets_are_unicode_aware() {
        let s = "héllo wörld";
        assert_eq!(char_slice(s, 0, 5), Some("héllo"));
        assert_eq!(char_slice(s, 6, 11), Some("wörld"));
        assert_eq!(char_slice(s, 6, 12), None);
        assert_eq!(char_slice(s, 11, 11), Some(""));
    }
}
