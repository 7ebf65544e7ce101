//! Seeded synthetic corpora with a planted campaign theme.
//!
//! Text is template English: neutral sentences come from subject/verb/object
//! pools padded with adjunct phrases, campaign documents carry paraphrased
//! theme sentences, and a few negative documents mention the theme terms in
//! passing. Each document has a topic that colors most of its
//! neutral sentences, so whole documents group by topic rather than by
//! campaign membership. Document lengths (in whitespace tokens) follow a
//! per-media lognormal and are hit exactly.
//!
//! Campaign documents are not spread over media like the corpus as a whole:
//! by default they lean toward long-form media, which is what makes short
//! campaign posts hard for a document-level classifier.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{split_corpus, Corpus, Document, Media, Split};
use crate::error::{Error, Result};
use crate::eval::Gold;
use crate::seed;

const MAX_SENTENCE: usize = 14;
const MIN_SENTENCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthSpec {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_docs: usize,
    /// Fraction of campaign documents, rounded to a count.
    pub campaign_rate: f64,
    /// Media shares of the whole corpus.
    pub media_mix: BTreeMap<Media, f64>,
    /// Media shares among campaign documents.
    pub campaign_media_mix: BTreeMap<Media, f64>,
    /// Token-length lognormal per media.
    pub length_model: BTreeMap<Media, LengthSpec>,
    pub theme_phrases: Vec<String>,
    pub distractor_phrases: Vec<String>,
    /// Fraction of a campaign document's sentences that carry the theme; at
    /// least one whenever the rate is positive.
    pub theme_insertion_rate: f64,
    /// Fraction of negative documents with one sentence mentioning the theme
    /// terms.
    pub distractor_doc_rate: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

fn mix(values: [f64; 6]) -> BTreeMap<Media, f64> {
    let total: f64 = values.iter().sum();
    Media::ALL.iter().zip(values).map(|(&m, v)| (m, v / total)).collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        let lengths = [(15.0, 7.4), (41.0, 25.0), (54.0, 32.0), (63.0, 38.0), (22.0, 13.0), (25.0, 15.0)];
        SynthConfig {
            n_docs: 2000,
            campaign_rate: 0.078,
            media_mix: mix([2795.0, 887.0, 2039.0, 415.0, 371.0, 160.0]),
            campaign_media_mix: mix([11.0, 7.0, 24.0, 13.0, 0.0, 1.0]),
            length_model: Media::ALL
                .iter()
                .zip(lengths)
                .map(|(&m, (mean, std))| (m, LengthSpec { mean, std }))
                .collect(),
            theme_phrases: [
                "secret biolabs",
                "biological weapons labs",
                "bioweapons laboratories",
                "covert biological research sites",
                "military biolabs",
            ]
            .map(String::from)
            .to_vec(),
            distractor_phrases: [
                "claims about biolabs",
                "the bioweapons rumor",
                "stories about biological weapons",
            ]
            .map(String::from)
            .to_vec(),
            theme_insertion_rate: 0.15,
            distractor_doc_rate: 0.03,
            train_fraction: 0.8,
            seed: 7,
        }
    }
}

fn check_mix(name: &str, mix: &BTreeMap<Media, f64>) -> Result<()> {
    if mix.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Config(format!("{name}: probabilities must be non-negative")));
    }
    let total: f64 = mix.values().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!("{name}: probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

fn check_rate(name: &str, r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be in [0, 1], got {r}")))
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_docs == 0 {
            return Err(Error::Config("n_docs must be positive".into()));
        }
        check_rate("campaign_rate", self.campaign_rate)?;
        check_rate("theme_insertion_rate", self.theme_insertion_rate)?;
        check_rate("distractor_doc_rate", self.distractor_doc_rate)?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must be in (0, 1), got {}", self.train_fraction)));
        }
        check_mix("media_mix", &self.media_mix)?;
        check_mix("campaign_media_mix", &self.campaign_media_mix)?;
        for m in Media::ALL {
            let Some(l) = self.length_model.get(&m) else {
                return Err(Error::Config(format!("length_model has no entry for {m}")));
            };
            if !(l.mean >= 1.0 && l.std >= 0.0 && l.mean.is_finite() && l.std.is_finite()) {
                return Err(Error::Config(format!("length_model.{m}: need mean >= 1 and std >= 0")));
            }
        }
        if self.theme_phrases.is_empty() && self.campaign_rate > 0.0 && self.theme_insertion_rate > 0.0 {
            return Err(Error::Config("theme_phrases is empty".into()));
        }
        if self.distractor_phrases.is_empty() && self.distractor_doc_rate > 0.0 {
            return Err(Error::Config("distractor_phrases is empty".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SynthConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn campaign_count(&self) -> usize {
        (self.campaign_rate * self.n_docs as f64).round() as usize
    }
}

/// Largest-remainder apportionment of `n` items by `shares`.
fn apportion(n: usize, shares: &BTreeMap<Media, f64>) -> BTreeMap<Media, usize> {
    let total: f64 = shares.values().sum();
    let mut out: BTreeMap<Media, usize> = BTreeMap::new();
    let mut rems: Vec<(f64, Media)> = Vec::new();
    let mut assigned = 0;
    for m in Media::ALL {
        let exact = n as f64 * shares.get(&m).copied().unwrap_or(0.0) / total;
        let base = exact.floor() as usize;
        out.insert(m, base);
        assigned += base;
        rems.push((exact - base as f64, m));
    }
    rems.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, m) in rems.into_iter().take(n - assigned) {
        *out.get_mut(&m).unwrap() += 1;
    }
    out
}

const SUBJECTS: &[&str] = &[
    "Officials", "Residents", "Analysts", "Volunteers", "Farmers", "The ministry", "Local authorities",
    "The city council", "Aid workers", "Journalists", "Teachers", "Doctors in Kyiv", "Engineers",
    "The regional governor", "European diplomats", "Shop owners", "Students", "The railway company",
    "Energy companies", "The mayor of Lviv", "Refugee families", "Border guards", "A charity group",
    "Economists", "The central bank", "Parliament", "Several villages", "Truck drivers", "Grain traders",
    "The health ministry", "Museum staff", "A local newspaper", "Hospital staff", "The police",
    "Rescue teams", "Young soldiers", "Opposition lawmakers", "Investors", "The weather service",
    "Church leaders", "Market vendors", "The Red Cross", "Families in Kharkiv", "Polish officials",
    "NATO members", "American diplomats", "Western governments", "The Pentagon",
];

const VERBS: &[&str] = &[
    "announced", "discussed", "reported", "delivered", "repaired", "organized", "criticized", "welcomed",
    "reviewed", "postponed", "expanded", "described", "received", "requested", "collected", "prepared",
    "rebuilt", "opened", "closed", "approved", "questioned", "supported", "documented", "shared",
    "planned", "restored", "distributed", "measured", "visited", "evacuated", "protested", "celebrated",
    "estimated", "debated", "launched", "cancelled", "inspected", "promised", "funded", "signed",
];

const OBJECTS: &[&str] = &[
    "new grain shipments", "the winter heating plan", "damaged bridges", "a school reopening",
    "emergency food aid", "the local budget", "power lines", "new bus routes", "fuel prices",
    "the harvest forecast", "temporary housing", "a blood drive", "water supplies", "the election calendar",
    "medical supplies", "a peace concert", "the export deal", "train schedules", "the cleanup effort",
    "rising bread prices", "a curfew change", "generator deliveries", "the reconstruction fund",
    "new shelters", "tax relief", "the vaccination schedule", "a memorial service", "internet outages",
    "the refugee registry", "farm subsidies", "mine clearing work", "a football match", "the pension increase",
    "hospital repairs", "fresh volunteers", "the border crossing", "a housing program", "school meals",
    "a charity auction", "the ceasefire talks", "bank transfers", "road closures",
];

const ADJUNCTS: &[&str] = &[
    "today", "again", "recently", "quietly", "yesterday", "officially", "finally", "reportedly",
    "this week", "on Monday", "on Friday", "last month", "in Odesa", "in the capital", "near Dnipro",
    "after the storm", "for the region", "despite the cold", "with local help", "before the weekend",
    "in rural areas", "across the country", "in Ukraine", "across Ukraine", "near Kharkiv", "in eastern Ukraine",
    "near the border", "according to local media", "for the second time",
    "after long delays", "in the western regions", "during the morning", "without much notice",
    "at a press briefing", "with European support", "in several districts", "ahead of winter",
];

const TOPICS: &[[&str; 8]] = &[
    ["wheat", "grain silos", "the harvest", "fertilizer", "tractors", "barley", "farmland", "seed stocks"],
    ["power plants", "gas pipelines", "transformers", "coal reserves", "solar panels", "heating oil", "substations", "wind farms"],
    ["railway stations", "freight trains", "rail tracks", "locomotives", "timetables", "sleeper cars", "depots", "ticket offices"],
    ["clinics", "vaccines", "ambulances", "nurses", "pharmacies", "surgeons", "hospital beds", "insulin"],
    ["classrooms", "textbooks", "exams", "universities", "school buses", "lecturers", "kindergartens", "scholarships"],
    ["stadiums", "the national team", "match tickets", "coaches", "football fans", "the league", "penalties", "training camps"],
    ["interest rates", "loans", "savings accounts", "the hryvnia", "bonds", "mortgages", "credit cards", "inflation"],
    ["museums", "paintings", "theaters", "orchestras", "folk songs", "libraries", "sculptures", "film festivals"],
    ["apartments", "rents", "construction crews", "roofs", "windows", "building permits", "dormitories", "cement"],
    ["ports", "cargo ships", "container terminals", "sea lanes", "dock workers", "tankers", "harbor cranes", "customs"],
    ["snowfall", "floods", "frost", "heat waves", "river levels", "storms", "rainfall", "ice roads"],
    ["software firms", "data centers", "startups", "programmers", "mobile networks", "laptops", "satellites", "cybersecurity"],
    ["churches", "monasteries", "priests", "choirs", "pilgrims", "icons", "parishes", "holiday services"],
    ["hotels", "tour guides", "beaches", "ski resorts", "hostels", "souvenirs", "airlines", "travel agencies"],
    ["bakeries", "restaurants", "sunflower oil", "dairy farms", "fishermen", "canned food", "supermarkets", "chefs"],
    ["ballots", "coalition talks", "lawmakers", "referendums", "campaign rallies", "opinion polls", "municipal votes", "party leaders"],
    ["buses", "trams", "fuel stations", "highways", "taxi drivers", "parking lots", "traffic lights", "ferries"],
    ["forests", "wildlife", "recycling plants", "air quality", "rivers", "national parks", "pollution", "water treatment"],
    ["coal mines", "miners", "iron ore", "steel mills", "quarries", "smelters", "mining towns", "ore trains"],
    ["newspapers", "radio stations", "television crews", "podcasts", "editors", "press passes", "printing houses", "broadcasts"],
];

const TOPIC_MODIFIERS: &[&str] = &["new", "local", "several", "damaged", "the", "more", "private", "state", "old", "costly"];

const MODALS: &[&str] = &["could", "may", "might", "will", "should"];

const ACTORS: &[&str] = &[
    "The Pentagon", "Western officials", "Foreign contractors", "American agencies", "NATO",
    "The government in Kyiv", "Secret services", "Western pharmaceutical firms",
];

const THEME_VERBS: &[&str] = &["funded", "built", "operated", "hid", "financed", "ran", "concealed", "expanded"];

const PLACES: &[&str] = &["in Ukraine", "near the border", "across Ukraine", "in eastern Ukraine", "near Kharkiv"];

const THEME_PREDICATES: &[&str] = &[
    "produced deadly pathogens",
    "tested dangerous viruses",
    "developed biological weapons",
    "worked on lethal diseases",
];

const THEME_PURPOSES: &[&str] = &[
    "to test deadly pathogens",
    "to hide dangerous viruses",
    "to develop biological weapons",
    "to study lethal diseases",
];

const CLAIM_OPENERS: &[&str] = &[
    "Leaked documents show that",
    "Many people now believe that",
    "It is clear that",
    "Nobody denies anymore that",
    "Independent sources confirm that",
];

const MENTION_LINKS: &[&str] = &["amid", "despite", "while dismissing", "after fact checks of", "ignoring"];

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

fn pick_string<'a>(rng: &mut ChaCha8Rng, pool: &'a [String]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

/// Pads `core` with adjuncts up to `target` tokens and punctuates it.
fn finish(mut core: Vec<String>, target: usize, rng: &mut ChaCha8Rng) -> String {
    let mut used: Vec<&'static str> = Vec::new();
    while core.len() < target {
        let room = target - core.len();
        let fitting: Vec<&'static str> = ADJUNCTS
            .iter()
            .copied()
            .filter(|a| a.split_whitespace().count() <= room && !used.contains(a))
            .collect();
        let a = *fitting.choose(rng).expect("one-word adjuncts always fit");
        used.push(a);
        core.extend(words(a));
    }
    let mut s = core.join(" ");
    if let Some(first) = s.get(..1) {
        let upper = first.to_uppercase();
        s.replace_range(..1, &upper);
    }
    s.push('.');
    s
}

/// Draws candidates from `gen` until one fits in `target` tokens; the
/// shortest candidate seen is truncated if none does.
fn fitting_core(target: usize, rng: &mut ChaCha8Rng, mut gen: impl FnMut(&mut ChaCha8Rng) -> Vec<String>) -> Vec<String> {
    let mut best = gen(rng);
    for _ in 0..100 {
        if best.len() <= target {
            return best;
        }
        let c = gen(rng);
        if c.len() < best.len() {
            best = c;
        }
    }
    best.truncate(target.max(1));
    best
}

fn neutral_core(topic: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut w = words(pick(rng, SUBJECTS));
    if rng.random_bool(0.15) {
        w.push(pick(rng, MODALS).to_string());
        w.push("have".into());
    }
    w.extend(words(pick(rng, VERBS)));
    if rng.random_bool(0.8) {
        w.push(pick(rng, TOPIC_MODIFIERS).into());
        w.extend(words(pick(rng, &TOPICS[topic])));
        if rng.random_bool(0.5) {
            w.push("and".into());
            w.extend(words(pick(rng, &TOPICS[topic])));
        }
    } else {
        w.extend(words(pick(rng, OBJECTS)));
    }
    w
}

fn neutral_sentence(target: usize, topic: usize, rng: &mut ChaCha8Rng) -> String {
    let core = fitting_core(target, rng, |rng| neutral_core(topic, rng));
    finish(core, target, rng)
}

fn theme_core(target: usize, phrases: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    fitting_core(target, rng, |rng| {
        let phrase = words(pick_string(rng, phrases));
        let mut w = Vec::new();
        match rng.random_range(0..4) {
            0 => {
                w.extend(words(pick(rng, ACTORS)));
                w.push(pick(rng, THEME_VERBS).into());
                w.extend(phrase);
                w.extend(words(pick(rng, PLACES)));
                w.extend(words(pick(rng, THEME_PURPOSES)));
            }
            1 => {
                w.extend(phrase);
                w.extend(words(pick(rng, PLACES)));
                w.extend(words(pick(rng, THEME_PREDICATES)));
            }
            2 => {
                w.extend(words(pick(rng, CLAIM_OPENERS)));
                w.extend(phrase);
                w.extend(words(pick(rng, THEME_PREDICATES)));
            }
            _ => {
                w.extend(phrase);
                w.extend(words(pick(rng, THEME_PREDICATES)));
            }
        }
        w
    })
}

/// An on-topic sentence that merely mentions the theme terms.
fn distractor_sentence(target: usize, topic: usize, phrases: &[String], rng: &mut ChaCha8Rng) -> String {
    let core = fitting_core(target, rng, |rng| {
        let mut w = neutral_core(topic, rng);
        w.extend(words(pick(rng, MENTION_LINKS)));
        w.extend(words(pick_string(rng, phrases)));
        w
    });
    finish(core, target, rng)
}

/// Splits a token budget into sentence lengths in `[MIN, MAX]`, except that
/// a budget below the minimum becomes one short sentence.
fn sentence_lengths(total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::new();
    let mut r = total;
    while r > 0 {
        if r <= MAX_SENTENCE {
            out.push(r);
            break;
        }
        let t = rng.random_range(MIN_SENTENCE..=MAX_SENTENCE.min(r - MIN_SENTENCE));
        out.push(t);
        r -= t;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Campaign,
    Distractor,
    Plain,
}

fn document_text(kind: Kind, length: usize, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> String {
    let topic = rng.random_range(0..TOPICS.len());
    let lengths = sentence_lengths(length, rng);
    let k = lengths.len();
    let mut special = vec![false; k];
    let n_special = match kind {
        Kind::Campaign if cfg.theme_insertion_rate > 0.0 => ((cfg.theme_insertion_rate * k as f64).round() as usize).clamp(1, k),
        Kind::Distractor => 1,
        _ => 0,
    };
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(rng);
    for &i in &idx[..n_special] {
        special[i] = true;
    }
    // Theme sentences stay unpadded; their unused budget goes to a plain
    // sentence when the document has one.
    let mut lengths = lengths;
    let mut cores: Vec<Option<Vec<String>>> = vec![None; k];
    if kind == Kind::Campaign {
        let plain = (0..k).find(|&i| !special[i]);
        for i in (0..k).filter(|&i| special[i]) {
            let core = theme_core(lengths[i], &cfg.theme_phrases, rng);
            if let Some(j) = plain {
                let slack = lengths[i].saturating_sub(core.len());
                lengths[j] += slack;
                lengths[i] -= slack;
            }
            cores[i] = Some(core);
        }
    }
    (0..k)
        .map(|i| match (kind, special[i], cores[i].take()) {
            (Kind::Campaign, true, Some(core)) => finish(core, lengths[i], rng),
            (Kind::Distractor, true, _) => distractor_sentence(lengths[i], topic, &cfg.distractor_phrases, rng),
            _ => neutral_sentence(lengths[i], topic, rng),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn lognormal(spec: LengthSpec) -> LogNormal<f64> {
    let s2 = (1.0 + (spec.std / spec.mean).powi(2)).ln();
    LogNormal::new(spec.mean.ln() - s2 / 2.0, s2.sqrt()).expect("valid lognormal")
}

/// Lognormal lengths for every document of each medium, rescaled so the
/// medium's sample mean hits the configured mean; small media would
/// otherwise drift by sampling noise alone.
fn media_lengths(cfg: &SynthConfig, plan: &[(Media, bool)], rng: &mut ChaCha8Rng) -> BTreeMap<Media, Vec<usize>> {
    let mut out = BTreeMap::new();
    for m in Media::ALL {
        let count = plan.iter().filter(|(pm, _)| *pm == m).count();
        if count == 0 {
            continue;
        }
        let spec = cfg.length_model[&m];
        let dist = lognormal(spec);
        let raw: Vec<f64> = (0..count).map(|_| dist.sample(rng)).collect();
        let scale = spec.mean * count as f64 / raw.iter().sum::<f64>();
        out.insert(m, raw.iter().map(|x| ((x * scale).round() as usize).max(3)).collect());
    }
    out
}

/// A generated corpus, already split into train and test.
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// Labels and media of every document.
    pub gold: Gold,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let n = cfg.n_docs;
    let n_campaign = cfg.campaign_count();
    let total = apportion(n, &cfg.media_mix);
    let campaign = apportion(n_campaign, &cfg.campaign_media_mix);
    // Negatives fill whatever each medium has left; any shortfall is taken
    // from the media with the most room so the total stays `n`.
    let mut negative: BTreeMap<Media, usize> = Media::ALL
        .iter()
        .map(|m| (*m, total[m].saturating_sub(campaign[m])))
        .collect();
    let mut missing = (n - n_campaign) as isize - negative.values().sum::<usize>() as isize;
    while missing != 0 {
        let m = *negative.iter().max_by_key(|(m, c)| (**c, std::cmp::Reverse(**m))).unwrap().0;
        if missing > 0 {
            *negative.get_mut(&m).unwrap() += 1;
            missing -= 1;
        } else {
            *negative.get_mut(&m).unwrap() -= 1;
            missing += 1;
        }
    }

    let mut rng = seed::rng(seed::derive(cfg.seed, 0x5359_4e54));
    let mut plan: Vec<(Media, bool)> = Vec::with_capacity(n);
    for m in Media::ALL {
        plan.extend(std::iter::repeat_n((m, true), campaign[&m]));
        plan.extend(std::iter::repeat_n((m, false), negative[&m]));
    }
    plan.shuffle(&mut rng);
    let n_negative = n - n_campaign;
    let n_distractor = (cfg.distractor_doc_rate * n_negative as f64).round() as usize;
    let mut neg_idx: Vec<usize> = (0..n_negative).collect();
    neg_idx.shuffle(&mut rng);
    let mut distractor = vec![false; n_negative];
    for &i in &neg_idx[..n_distractor] {
        distractor[i] = true;
    }

    let mut lengths = media_lengths(cfg, &plan, &mut rng);
    let width = n.to_string().len().max(5);
    let mut docs = Vec::with_capacity(n);
    let mut neg_seen = 0;
    for (i, &(media, label)) in plan.iter().enumerate() {
        let kind = if label {
            Kind::Campaign
        } else {
            neg_seen += 1;
            if distractor[neg_seen - 1] {
                Kind::Distractor
            } else {
                Kind::Plain
            }
        };
        let length = lengths.get_mut(&media).and_then(Vec::pop).expect("one length per document");
        docs.push(Document {
            doc_id: format!("syn-{i:0width$}"),
            media,
            text: document_text(kind, length, cfg, &mut rng),
            label,
            split: Split::Train,
        });
    }
    let corpus = split_corpus(&Corpus::new(docs)?, cfg.train_fraction, seed::derive(cfg.seed, 0x5350_4c54))?;
    let gold = Gold::new(corpus.iter().map(|d| (d.doc_id.clone(), d.label, d.media)));
    Ok(SynthCorpus { corpus, gold })
}

/// Synthetic belief-span sidecar: every trigram headed by a known verb.
/// Spans after a modal are marked possible belief, the rest committed.
/// Records are JSON lines in document order.
pub fn emit_verb_trigram_spans(corpus: &Corpus) -> Vec<crate::corpus::BeliefSpanRecord> {
    use crate::corpus::{BeliefSpanRecord, Factuality, SpanSource};
    let verbs: std::collections::HashSet<&str> = VERBS.iter().chain(THEME_VERBS).copied().collect();
    let mut out = Vec::new();
    for d in corpus.iter() {
        // (char_start, char_end, bare lowercase word)
        let mut toks: Vec<(usize, usize, String)> = Vec::new();
        let mut start = None;
        for (ci, c) in d.text.chars().chain(std::iter::once(' ')).enumerate() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(ci),
                (true, Some(s)) => {
                    let w: String = d.text.chars().skip(s).take(ci - s).collect();
                    let bare = w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
                    toks.push((s, ci, bare));
                    start = None;
                }
                _ => {}
            }
        }
        for i in 0..toks.len().saturating_sub(2) {
            if !verbs.contains(toks[i].2.as_str()) {
                continue;
            }
            let modal = i >= 2 && MODALS.contains(&toks[i - 2].2.as_str());
            out.push(BeliefSpanRecord {
                doc_id: d.doc_id.clone(),
                char_start: toks[i].0,
                char_end: toks[i + 2].1,
                source: SpanSource::Author,
                factuality: if modal {
                    Factuality::PossibleBelief
                } else {
                    Factuality::CommittedBelief
                },
            });
        }
    }
    out
}

pub fn write_spans_jsonl(spans: &[crate::corpus::BeliefSpanRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in spans {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::split_sentences;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_docs: 300,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn default_config_roundtrips_through_toml() {
        let cfg = SynthConfig::default();
        let back = SynthConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut cfg = SynthConfig::default();
        cfg.media_mix.insert(Media::Twitter, 0.9);
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        let cfg = SynthConfig {
            campaign_rate: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn apportion_is_exact() {
        let cfg = SynthConfig::default();
        for n in [1, 7, 100, 1999] {
            assert_eq!(apportion(n, &cfg.media_mix).values().sum::<usize>(), n);
        }
        let c = apportion(156, &cfg.campaign_media_mix);
        assert_eq!(c[&Media::Reddit], 0);
    }

    #[test]
    fn lengths_are_exact() {
        let mut rng = seed::rng(3);
        for total in 3..200 {
            let ls = sentence_lengths(total, &mut rng);
            assert_eq!(ls.iter().sum::<usize>(), total);
            if total >= MIN_SENTENCE {
                assert!(ls.iter().all(|&l| (MIN_SENTENCE..=MAX_SENTENCE).contains(&l)));
            }
            let text = ls.iter().map(|&t| neutral_sentence(t, 0, &mut rng)).collect::<Vec<_>>().join(" ");
            if total >= MIN_SENTENCE {
                assert_eq!(text.split_whitespace().count(), total);
                assert_eq!(split_sentences(&text).len(), ls.len());
            }
        }
    }

    #[test]
    fn campaign_documents_carry_the_theme() {
        let s = generate(&small(1)).unwrap();
        let has_theme = |t: &str| {
            split_sentences(t)
                .iter()
                .any(|x| THEME_PREDICATES.iter().any(|p| x.contains(p)) || SynthConfig::default().theme_phrases.iter().any(|p| x.contains(p.as_str())))
        };
        for d in s.corpus.iter() {
            if d.label {
                assert!(has_theme(&d.text), "{}", d.text);
            }
        }
        let train = s.corpus.in_split(Split::Train).count();
        assert_eq!(train, 240);
    }

    #[test]
    fn spans_point_at_verbs() {
        let s = generate(&small(2)).unwrap();
        let spans = emit_verb_trigram_spans(&s.corpus);
        assert!(!spans.is_empty());
        for r in spans.iter().take(200) {
            let d = s.corpus.get(&r.doc_id).unwrap();
            let t = crate::text::char_slice(&d.text, r.char_start, r.char_end).unwrap();
            assert_eq!(t.split_whitespace().count(), 3);
        }
    }
}
