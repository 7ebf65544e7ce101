use campaign_detect::corpus::{segment_corpus, Corpus, Document, Granularity, Media, Split};
use campaign_detect::embed::{cosine_similarity, embed_parts, EmbeddingBackend};
use campaign_detect::text::char_slice;
use proptest::prelude::*;
use serde::Deserialize;

fn doc(id: &str, text: &str) -> Document {
    Document {
        doc_id: id.into(),
        media: Media::News,
        text: text.into(),
        label: false,
        split: Split::Train,
    }
}

#[derive(Deserialize)]
struct SentenceCase {
    text: String,
    sentences: Vec<String>,
}

#[test]
fn sentence_splitter_matches_hand_segmented_cases() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/sentences.json");
    let cases: Vec<SentenceCase> = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(cases.len() >= 10);
    for (i, case) in cases.iter().enumerate() {
        let corpus = Corpus::new(vec![doc(&format!("d{i}"), &case.text)]).unwrap();
        let parts = segment_corpus(&corpus, Granularity::Sentence, None).unwrap();
        let got: Vec<&str> = parts.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(got, case.sentences, "case {i}: {:?}", case.text);
    }
}

proptest! {
    #[test]
    fn parts_are_substrings_at_their_offsets(
        texts in prop::collection::vec("[A-Za-z .!?\"é\n]{1,60}", 1..6),
    ) {
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.trim().is_empty())
            .map(|(i, t)| doc(&format!("d{i}"), t))
            .collect();
        prop_assume!(!docs.is_empty());
        let corpus = Corpus::new(docs).unwrap();
        for g in [Granularity::WholeDoc, Granularity::Sentence] {
            for p in segment_corpus(&corpus, g, None).unwrap() {
                let d = corpus.get(&p.doc_id).unwrap();
                prop_assert!(p.char_start < p.char_end);
                prop_assert_eq!(char_slice(&d.text, p.char_start, p.char_end), Some(p.text.as_str()));
            }
        }
    }
}

// Dense re-derivation of the hashed TF-IDF embedding: explicit term list,
// explicit 65536 x dim projection entries, no shared code with the crate.
mod oracle {
    pub fn fnv(bytes: &[u8]) -> u64 {
        bytes.iter().fold(0xcbf29ce484222325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
    }

    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn terms(text: &str) -> Vec<String> {
        let words: Vec<String> = text
            .split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        let mut out: Vec<String> = words.iter().map(|w| format!("w:{w}")).collect();
        for pair in words.windows(2) {
            out.push(format!("b:{} {}", pair[0], pair[1]));
        }
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        for tri in chars.windows(3) {
            out.push(format!("c:{}", tri.iter().collect::<String>()));
        }
        out
    }

    pub fn embed(texts: &[&str], dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let buckets: Vec<Vec<usize>> = texts
            .iter()
            .map(|t| terms(t).iter().map(|s| (fnv(s.as_bytes()) & 0xffff) as usize).collect())
            .collect();
        let n = texts.len() as f64;
        let mut tfidf = vec![vec![0.0f64; 65536]; texts.len()];
        for (row, bs) in tfidf.iter_mut().zip(&buckets) {
            for &b in bs {
                row[b] += 1.0;
            }
        }
        for b in 0..65536 {
            let df = tfidf.iter().filter(|r| r[b] > 0.0).count() as f64;
            let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
            for r in tfidf.iter_mut() {
                r[b] *= idf;
            }
        }
        let seed_mix = mix(seed);
        tfidf
            .iter()
            .map(|r| {
                let mut out = vec![0.0; dim];
                for (b, &w) in r.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let base = mix(seed_mix ^ (b as u64).wrapping_mul(0xd6e8feb86659fd93));
                    for j in 0..8u64 {
                        let h = mix(base.wrapping_add(j));
                        let s = if h >> 63 == 1 { -1.0 } else { 1.0 } / 8f64.sqrt();
                        out[(h % dim as u64) as usize] += w * s;
                    }
                }
                let nrm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.iter().map(|x| x / nrm).collect()
            })
            .collect()
    }
}

fn parts_of(texts: &[&str]) -> Vec<campaign_detect::corpus::Part> {
    let docs = texts.iter().enumerate().map(|(i, t)| doc(&format!("d{i}"), t)).collect();
    segment_corpus(&Corpus::new(docs).unwrap(), Granularity::WholeDoc, None).unwrap()
}

#[test]
fn hashed_embedding_matches_dense_oracle() {
    let texts = ["aaa bbb", "xxx yyy", "The cat sat on the mat.", "the cat SAT!"];
    let m = embed_parts(&parts_of(&texts), &EmbeddingBackend::BuiltinHash, 64, 7).unwrap();
    let oracle = oracle::embed(&texts, 64, 7);
    for (i, row) in oracle.iter().enumerate() {
        for (a, b) in m.row(i).iter().zip(row) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

// Disjoint texts project to cosine 0 in expectation. A single projection
// has spread about 1/sqrt(dim), so the check is on the seed distribution;
// individual values are pinned against the oracle.
#[test]
fn disjoint_vocabulary_is_nearly_orthogonal() {
    let texts = ["aaa bbb", "xxx yyy"];
    let parts = parts_of(&texts);
    let o = oracle::embed(&texts, 256, 0);
    let oracle_cos: f64 = o[0].iter().zip(&o[1]).map(|(a, b)| a * b).sum();
    let m = embed_parts(&parts, &EmbeddingBackend::BuiltinHash, 256, 0).unwrap();
    assert!((cosine_similarity(m.row(0), m.row(1)).unwrap() - oracle_cos).abs() < 1e-12);

    let cos: Vec<f64> = (0..400u64)
        .map(|s| {
            let m = embed_parts(&parts, &EmbeddingBackend::BuiltinHash, 256, s).unwrap();
            cosine_similarity(m.row(0), m.row(1)).unwrap()
        })
        .collect();
    let mean = cos.iter().sum::<f64>() / cos.len() as f64;
    let sd = (cos.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / cos.len() as f64).sqrt();
    assert!(mean.abs() < 0.01, "mean {mean}");
    assert!(sd < 1.15 / 16.0, "sd {sd}");
}

#[test]
fn cosine_hand_value() {
    let c = cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((c - 32.0 / (14f64.sqrt() * 77f64.sqrt())).abs() < 1e-12);
    assert!((c - 0.9746).abs() < 1e-4);
}
