use std::collections::BTreeMap;

use campaign_detect::cluster::ExperimentGrid;
use campaign_detect::corpus::{segment_corpus, Granularity, Media, Split};
use campaign_detect::eval::Gold;
use campaign_detect::pipeline::{run_full_pipeline, PipelineConfig};
use campaign_detect::synthgen::{emit_verb_trigram_spans, generate, SynthConfig};
use proptest::prelude::*;

#[test]
fn campaign_count_at_seed_7() {
    let cfg = SynthConfig {
        n_docs: 1000,
        campaign_rate: 0.078,
        seed: 7,
        ..Default::default()
    };
    let s = generate(&cfg).unwrap();
    assert_eq!(s.corpus.len(), 1000);
    assert_eq!(s.corpus.iter().filter(|d| d.label).count(), 78);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        n_docs: 300,
        ..Default::default()
    };
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    generate(&cfg).unwrap().corpus.write_jsonl(&a).unwrap();
    generate(&cfg).unwrap().corpus.write_jsonl(&b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let other = SynthConfig { seed: 8, ..cfg };
    generate(&other).unwrap().corpus.write_jsonl(&b).unwrap();
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn media_mean_lengths_within_15_percent() {
    for seed in 0..5 {
        let cfg = SynthConfig {
            n_docs: 1000,
            seed,
            ..Default::default()
        };
        let s = generate(&cfg).unwrap();
        let mut words: BTreeMap<Media, (usize, usize)> = BTreeMap::new();
        for d in s.corpus.iter() {
            let e = words.entry(d.media).or_default();
            e.0 += d.text.split_whitespace().count();
            e.1 += 1;
        }
        for (m, (w, n)) in words {
            let mean = w as f64 / n as f64;
            let want = cfg.length_model[&m].mean;
            assert!((mean - want).abs() <= 0.15 * want, "seed {seed} {m}: mean {mean:.1} vs {want}");
        }
    }
}

#[test]
fn gold_matches_corpus() {
    let s = generate(&SynthConfig {
        n_docs: 500,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(s.gold.len(), 500);
    for (id, label, media) in s.gold.iter() {
        let d = s.corpus.get(id).unwrap();
        assert_eq!((d.label, d.media), (label, media));
    }
    let test = Gold::from_corpus(&s.corpus, Split::Test);
    assert_eq!(test.len(), 100);
}

#[test]
fn spans_feed_the_target_granularities() {
    let s = generate(&SynthConfig {
        n_docs: 200,
        ..Default::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("spans.jsonl");
    let spans = emit_verb_trigram_spans(&s.corpus);
    campaign_detect::synthgen::write_spans_jsonl(&spans, &p).unwrap();
    let all = segment_corpus(&s.corpus, Granularity::TargetAll, Some(&p)).unwrap();
    let at = segment_corpus(&s.corpus, Granularity::TargetAt, Some(&p)).unwrap();
    assert_eq!(all.len(), spans.len());
    assert!(!at.is_empty() && at.len() < all.len());
    let ids: std::collections::HashSet<&str> = all.iter().map(|p| p.part_id.as_str()).collect();
    assert!(at.iter().all(|p| ids.contains(p.part_id.as_str())));
}

fn f1_at(theme_insertion_rate: f64, seed: u64) -> f64 {
    let s = generate(&SynthConfig {
        n_docs: 1000,
        theme_insertion_rate,
        seed,
        ..Default::default()
    })
    .unwrap();
    let mut cfg = PipelineConfig::new(Granularity::Sentence, ExperimentGrid::reduced(0));
    cfg.runs = 2;
    cfg.seed = seed;
    run_full_pipeline(&s.corpus, &cfg).unwrap().summary.f1.mean
}

// Without theme sentences campaign documents differ from the rest only in
// their media mix, which sentence clusters cannot see. The all-positive rule
// scores 2p/(1+p), about 0.145 at the default campaign rate.
#[test]
fn no_theme_no_signal() {
    let with = f1_at(SynthConfig::default().theme_insertion_rate, 3);
    let without = f1_at(0.0, 3);
    let p = 0.078;
    let base = 2.0 * p / (1.0 + p);
    assert!(without <= base + 0.1, "F1 {without:.3} without theme, base rate {base:.3}");
    assert!(with > without + 0.3, "F1 {with:.3} with theme vs {without:.3} without");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn label_balance_matches_config(n in 50usize..600, rate in 0.0f64..0.5, seed in 0u64..100) {
        let cfg = SynthConfig { n_docs: n, campaign_rate: rate, seed, ..Default::default() };
        let s = generate(&cfg).unwrap();
        prop_assert_eq!(s.corpus.len(), n);
        prop_assert_eq!(s.corpus.iter().filter(|d| d.label).count(), (rate * n as f64).round() as usize);
        let train = s.corpus.in_split(Split::Train).count();
        prop_assert_eq!(train, (0.8 * n as f64).round() as usize);
    }

    #[test]
    fn invalid_probabilities_are_rejected(bad in prop_oneof![-1.0f64..-0.001, 1.001f64..3.0]) {
        let cfgs = [
            SynthConfig { campaign_rate: bad, ..Default::default() },
            SynthConfig { theme_insertion_rate: bad, ..Default::default() },
            SynthConfig { distractor_doc_rate: bad, ..Default::default() },
        ];
        for c in cfgs {
            prop_assert!(generate(&c).is_err());
        }
    }
}

#[test]
fn shipped_configs_match_the_defaults() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let synth = SynthConfig::load(std::path::Path::new(&format!("{root}/synth.toml"))).unwrap();
    assert_eq!(synth, SynthConfig::default());
    let reduced = ExperimentGrid::load(std::path::Path::new(&format!("{root}/grid-reduced.toml"))).unwrap();
    assert_eq!(reduced, ExperimentGrid::reduced(0));
    let paper = ExperimentGrid::load(std::path::Path::new(&format!("{root}/grid-paper.toml"))).unwrap();
    assert_eq!(paper, ExperimentGrid::paper_default(0));
    assert_eq!(paper.experiment_count(), 135);
}
