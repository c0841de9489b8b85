//! Deterministic synthetic corpora for tests, examples and self-checks.
//!
//! Documents are built from pseudo-words. Each document has a topic that
//! skews its word distribution, sections carry kind-specific marker words,
//! and titles reuse topic and section vocabulary, so every training head
//! has something learnable.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, DocumentRecord, SectionRecord, Thread};
use crate::eval::EmbeddingCache;
use crate::synth::{derive_rng, Nuclearity, PdtbRecord, RelationType, RstDocument, RstTree, TaskInstance};

const FUNCTION_WORDS: [&str; 12] = ["the", "of", "and", "a", "in", "is", "to", "was", "for", "on", "with", "as"];

const SECTION_KINDS: [&str; 8] = [
    "history",
    "design",
    "reception",
    "legacy",
    "geography",
    "economy",
    "structure",
    "culture",
];

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr"];
const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "ai"];

/// The `i`-th pseudo-word; distinct for distinct `i`.
pub fn pseudo_word(mut i: usize) -> String {
    let mut w = String::new();
    let base = ONSETS.len() * VOWELS.len();
    loop {
        let syl = i % base;
        w.push_str(ONSETS[syl / VOWELS.len()]);
        w.push_str(VOWELS[syl % VOWELS.len()]);
        i /= base;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    w.push('n');
    w
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureConfig {
    pub n_docs: usize,
    pub seed: u64,
    pub topics: usize,
    pub words_per_topic: usize,
    pub shared_words: usize,
    pub sections: (usize, usize),
    pub paragraphs: (usize, usize),
    pub sentences: (usize, usize),
    pub sentence_len: (usize, usize),
}

impl FixtureConfig {
    /// Documents of roughly 90 sentences over a vocabulary near 2000 words.
    pub fn small(n_docs: usize, seed: u64) -> Self {
        FixtureConfig {
            n_docs,
            seed,
            topics: 20,
            words_per_topic: 80,
            shared_words: 400,
            sections: (3, 6),
            paragraphs: (2, 4),
            sentences: (5, 8),
            sentence_len: (6, 14),
        }
    }

    /// Long documents (around 200 sentences) for training runs.
    pub fn training(n_docs: usize, seed: u64) -> Self {
        FixtureConfig {
            sections: (5, 9),
            paragraphs: (3, 6),
            sentences: (5, 9),
            ..Self::small(n_docs, seed)
        }
    }

    /// Tiny documents for fast unit tests.
    pub fn tiny(n_docs: usize, seed: u64) -> Self {
        FixtureConfig {
            sections: (1, 2),
            paragraphs: (1, 2),
            sentences: (3, 5),
            sentence_len: (4, 8),
            ..Self::small(n_docs, seed)
        }
    }
}

struct Lexicon {
    topic: Vec<Vec<String>>,
    shared: Vec<String>,
    /// One group per section kind, plus a final group for lead sections.
    section_markers: Vec<Vec<String>>,
    /// Paragraph-position openers, one group per position (last open-ended).
    openers: Vec<Vec<String>>,
}

const OPENER_POSITIONS: usize = 8;

impl Lexicon {
    fn new(cfg: &FixtureConfig) -> Self {
        let mut next = 0;
        let mut take = |n: usize| {
            let out: Vec<String> = (next..next + n).map(pseudo_word).collect();
            next += n;
            out
        };
        let topic = (0..cfg.topics).map(|_| take(cfg.words_per_topic)).collect();
        let shared = take(cfg.shared_words);
        let section_markers = (0..=SECTION_KINDS.len()).map(|_| take(6)).collect();
        let openers = (0..OPENER_POSITIONS).map(|_| take(3)).collect();
        Lexicon {
            topic,
            shared,
            section_markers,
            openers,
        }
    }
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Zipf-like pick: rank `r` has weight `1/(r+1)`.
fn zipf<'a, T>(rng: &mut ChaCha8Rng, pool: &'a [T]) -> &'a T {
    let total: f64 = (1..=pool.len()).map(|r| 1.0 / r as f64).sum();
    let mut u = rng.random::<f64>() * total;
    for (r, item) in pool.iter().enumerate() {
        u -= 1.0 / (r + 1) as f64;
        if u <= 0.0 {
            return item;
        }
    }
    pool.last().expect("nonempty pool")
}

fn sentence(rng: &mut ChaCha8Rng, lex: &Lexicon, topic: usize, kind: usize, len: usize) -> String {
    sentence_at(rng, lex, topic, kind, len, None)
}

/// A sentence; `position` (within its paragraph) adds a position opener
/// most of the time.
fn sentence_at(
    rng: &mut ChaCha8Rng,
    lex: &Lexicon,
    topic: usize,
    kind: usize,
    len: usize,
    position: Option<usize>,
) -> String {
    let mut words: Vec<&str> = Vec::with_capacity(len + 1);
    if let Some(p) = position {
        if rng.random_bool(0.7) {
            words.push(lex.openers[p.min(OPENER_POSITIONS - 1)].choose(rng).expect("nonempty"));
        }
    }
    words.extend((0..len)
        .map(|_| {
            let u: f64 = rng.random();
            if u < 0.3 {
                *zipf(rng, &FUNCTION_WORDS)
            } else if u < 0.7 {
                zipf(rng, &lex.topic[topic])
            } else if u < 0.85 {
                zipf(rng, &lex.section_markers[kind])
            } else {
                zipf(rng, &lex.shared)
            }
        }));
    format!("{}.", capitalize(&words.join(" ")))
}

/// Word vectors for the fixture lexicon in the plain-text
/// `token v1 … vd` format. Words of one topic (or one section kind) sit
/// around a shared centroid, loosely imitating pretrained vectors.
pub fn fixture_vectors(cfg: &FixtureConfig, dim: usize) -> String {
    let lex = Lexicon::new(cfg);
    let mut rng = derive_rng(cfg.seed, &["fixture", "vectors"]);
    let mut out = String::new();
    let mut emit = |rng: &mut ChaCha8Rng, word: &str, centre: &[f64]| {
        out.push_str(word);
        for c in centre {
            out.push_str(&format!(" {:.4}", c + rng.random_range(-0.15..0.15)));
        }
        out.push('\n');
    };
    let random_centre = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect() };
    for w in FUNCTION_WORDS {
        let c = random_centre(&mut rng);
        emit(&mut rng, w, &c);
    }
    for group in lex.topic.iter().chain(&lex.section_markers).chain(&lex.openers) {
        let c = random_centre(&mut rng);
        for w in group {
            emit(&mut rng, w, &c);
        }
    }
    for w in &lex.shared {
        let c = random_centre(&mut rng);
        emit(&mut rng, w, &c);
    }
    out
}

/// Wikipedia-like documents with titles, categories, leveled sections and
/// paragraphs.
pub fn synthetic_corpus(cfg: &FixtureConfig) -> Vec<Document> {
    let lex = Lexicon::new(cfg);
    (0..cfg.n_docs)
        .map(|d| {
            let id = format!("doc{d:05}");
            let mut rng = derive_rng(cfg.seed, &["fixture", &id]);
            let topic = rng.random_range(0..cfg.topics);
            let title = format!(
                "{} {}",
                capitalize(lex.topic[topic].choose(&mut rng).expect("nonempty")),
                lex.topic[topic].choose(&mut rng).expect("nonempty")
            );
            let mut categories = vec![format!("topic{topic}")];
            categories.push(format!("group{}", topic / 4));
            if rng.random_bool(0.5) {
                categories.push(format!("misc{}", rng.random_range(0..10)));
            }
            // a lead section, then section kinds in their conventional order
            let n_sections = range(&mut rng, cfg.sections).min(SECTION_KINDS.len() + 1);
            let mut kinds: Vec<usize> = rand::seq::index::sample(&mut rng, SECTION_KINDS.len(), n_sections - 1).into_vec();
            kinds.sort_unstable();
            kinds.insert(0, SECTION_KINDS.len());
            let sections = kinds
                .into_iter()
                .map(|kind| {
                    let (title, level) = match SECTION_KINDS.get(kind) {
                        None => (String::new(), 1),
                        Some(k) => (capitalize(k), 1 + (kind % 3) as i64),
                    };
                    let paragraphs = (0..range(&mut rng, cfg.paragraphs))
                        .map(|_| {
                            (0..range(&mut rng, cfg.sentences))
                                .map(|j| {
                                    let len = range(&mut rng, cfg.sentence_len);
                                    sentence_at(&mut rng, &lex, topic, kind, len, Some(j))
                                })
                                .collect()
                        })
                        .collect();
                    SectionRecord { title, level, paragraphs }
                })
                .collect();
            DocumentRecord {
                id,
                title,
                categories,
                sections,
            }
            .into_document(d + 1)
            .expect("fixture documents are valid")
        })
        .collect()
}

const PAPER_SECTIONS: [&str; 4] = ["Method", "Experiments", "Analysis", "Related Work"];

/// Paper-like documents: Abstract first, then Introduction, two or three
/// middle sections and a Conclusion. Some middle sentences are equations.
pub fn synthetic_papers(n: usize, seed: u64) -> Vec<Document> {
    let cfg = FixtureConfig::small(n, seed);
    let lex = Lexicon::new(&cfg);
    (0..n)
        .map(|d| {
            let id = format!("paper{d:04}");
            let mut rng = derive_rng(seed, &["papers", &id]);
            let topic = rng.random_range(0..cfg.topics);
            let mut titles = vec!["Abstract", "Introduction"];
            let n_mid = rng.random_range(2..=3);
            titles.extend(&PAPER_SECTIONS[..n_mid]);
            titles.push("Conclusion");
            let sections = titles
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let n_sent = if k == 0 { 6 } else { 8 };
                    let mut para: Vec<String> = (0..n_sent)
                        .map(|_| {
                            let len = rng.random_range(7..=14);
                            sentence(&mut rng, &lex, topic, k % SECTION_KINDS.len(), len)
                        })
                        .collect();
                    if k >= 2 && rng.random_bool(0.5) {
                        para.push("x = y + z".to_string());
                    }
                    SectionRecord {
                        title: t.to_string(),
                        level: 1,
                        paragraphs: vec![para],
                    }
                })
                .collect();
            DocumentRecord {
                id,
                title: format!("On {}", lex.topic[topic][0]),
                categories: vec![format!("topic{topic}")],
                sections,
            }
            .into_document(d + 1)
            .expect("fixture papers are valid")
        })
        .collect()
}

/// Chat threads of `len` content utterances, with occasional system
/// messages and one-word replies mixed in (both removed by the default
/// thread filter).
pub fn synthetic_threads(n_threads: usize, len: usize, seed: u64) -> Vec<Thread> {
    let cfg = FixtureConfig::small(n_threads, seed);
    let lex = Lexicon::new(&cfg);
    (0..n_threads)
        .map(|t| {
            let thread_id = format!("thread{t:04}");
            let mut rng = derive_rng(seed, &["threads", &thread_id]);
            let topic = rng.random_range(0..cfg.topics);
            let mut utterances = Vec::new();
            for _ in 0..len {
                if rng.random_bool(0.1) {
                    utterances.push("=== someone joined the channel".to_string());
                }
                if rng.random_bool(0.1) {
                    utterances.push("ok".to_string());
                }
                let n = rng.random_range(4..=12);
                utterances.push(sentence(&mut rng, &lex, topic, 0, n).to_lowercase());
            }
            Thread { thread_id, utterances }
        })
        .collect()
}

/// Latest starting hour of a timeline story.
pub const TIMELINE_MAX_START: usize = 10;

/// Stories of five time-stamped events in one paragraph. Each story starts
/// at a random hour in `0..=TIMELINE_MAX_START` and advances one hour per
/// sentence, so a sentence's hour alone says little about its position while
/// its neighbours' hours pin it down.
pub fn timeline_corpus(n_docs: usize, seed: u64) -> Vec<Document> {
    let cfg = FixtureConfig::small(n_docs, seed);
    let lex = Lexicon::new(&cfg);
    (0..n_docs)
        .map(|d| {
            let id = format!("story{d:05}");
            let mut rng = derive_rng(seed, &["timeline", &id]);
            let start = rng.random_range(0..=TIMELINE_MAX_START);
            let topic = rng.random_range(0..cfg.topics);
            let para: Vec<String> = (0..5)
                .map(|p| {
                    let a = lex.topic[topic].choose(&mut rng).expect("nonempty");
                    let b = lex.shared.choose(&mut rng).expect("nonempty");
                    format!("At hour {} the {a} met the {b}.", start + p)
                })
                .collect();
            DocumentRecord {
                id,
                title: format!("Story {d}"),
                categories: vec![format!("topic{topic}")],
                sections: vec![SectionRecord {
                    title: String::new(),
                    level: 1,
                    paragraphs: vec![para],
                }],
            }
            .into_document(d + 1)
            .expect("timeline documents are valid")
        })
        .collect()
}

fn hour_of(sentence: &str) -> f64 {
    let mut words = sentence.split_whitespace();
    while let Some(w) = words.next() {
        if w == "hour" {
            if let Some(h) = words.next().and_then(|h| h.parse::<f64>().ok()) {
                return h;
            }
        }
    }
    0.0
}

/// Sentence vectors from a clock-like encoder that only knows the hour of a
/// timeline sentence: the first coordinate is `hour / 4`, the rest are small
/// noise.
pub fn clock_embeddings(instances: &[TaskInstance], dim: usize, seed: u64) -> EmbeddingCache {
    let mut cache = EmbeddingCache::new(dim);
    for inst in instances {
        for (slot, s) in inst.body.sentences().into_iter().enumerate() {
            let mut rng = derive_rng(seed, &["clock", &inst.instance_id, &slot.to_string()]);
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.05..0.05)).collect();
            v[0] += hour_of(s) / 4.0;
            cache.insert(&inst.instance_id, slot, v).expect("uniform dim");
        }
    }
    cache
}

fn pdtb(section: i64, ty: RelationType, label: &str, k: usize) -> PdtbRecord {
    let connective = match ty {
        RelationType::Explicit => Some(match label {
            "Comparison.Contrast" => "But",
            "Contingency.Cause" => "because",
            _ => "although",
        }),
        RelationType::Implicit => None,
    };
    let arg2_body = format!("the second argument number {k} follows here.");
    let arg2 = match (connective, k % 3) {
        (Some(c), 0) => format!("{c} {arg2_body}"),
        (Some(c), 1) => format!("{}, {c}, {}", "Meanwhile", arg2_body),
        _ => capitalize(&arg2_body),
    };
    PdtbRecord {
        section,
        relation_type: ty,
        arg1: format!("The first argument number {k} comes first."),
        arg2,
        connective: connective.map(str::to_string),
        label: label.to_string(),
        doc_id: Some(format!("wsj_{section:02}{:02}", k % 7)),
    }
}

/// Sixty relation records spanning sections 1–24. Explicit Contrast and
/// Cause plus implicit Conjunction and Restatement have at least ten
/// training records each; explicit Concession has nine and is filtered. Four
/// records fall in unused sections. The first record is the treebank
/// "But it remains to be seen" example.
pub fn pdtb_fixture() -> Vec<PdtbRecord> {
    let mut out = vec![PdtbRecord {
        section: 2,
        relation_type: RelationType::Explicit,
        arg1: "In any case, the brokerage firms are clearly moving faster to create new ads than they did in the fall of 1987.".into(),
        arg2: "But it remains to be seen whether their ads will be any more effective.".into(),
        connective: Some("But".into()),
        label: "Comparison.Contrast".into(),
        doc_id: Some("wsj_0201".into()),
    }];
    let train = |k: usize| 2 + (k % 13) as i64;
    let mut k = 1;
    let mut push = |out: &mut Vec<PdtbRecord>, section: i64, ty, label: &str| {
        out.push(pdtb(section, ty, label, k));
        k += 1;
    };
    use RelationType::{Explicit, Implicit};
    for i in 0..10 {
        push(&mut out, train(i), Explicit, "Comparison.Contrast");
    }
    for i in 0..10 {
        push(&mut out, train(i + 3), Explicit, "Contingency.Cause");
    }
    for i in 0..9 {
        push(&mut out, train(i + 5), Explicit, "Comparison.Concession");
    }
    for i in 0..10 {
        push(&mut out, train(i + 7), Implicit, "Expansion.Conjunction");
    }
    for i in 0..10 {
        push(&mut out, train(i + 9), Implicit, "Expansion.Restatement");
    }
    push(&mut out, 15, Explicit, "Comparison.Contrast");
    push(&mut out, 18, Explicit, "Comparison.Concession");
    push(&mut out, 16, Implicit, "Expansion.Conjunction");
    push(&mut out, 19, Explicit, "Contingency.Cause");
    push(&mut out, 23, Implicit, "Expansion.Restatement");
    push(&mut out, 21, Explicit, "Comparison.Concession");
    push(&mut out, 1, Explicit, "Comparison.Contrast");
    push(&mut out, 1, Implicit, "Expansion.Conjunction");
    push(&mut out, 24, Explicit, "Contingency.Cause");
    push(&mut out, 24, Implicit, "Expansion.Restatement");
    out
}

/// The three-EDU example tree: an NN-Attribution node over a Joint of EDUs
/// 1 and 2, and EDU 3.
pub fn attribution_tree() -> RstTree {
    RstTree::node(
        "Attribution",
        Nuclearity::NN,
        vec![
            RstTree::node("Joint", Nuclearity::NN, vec![RstTree::leaf(1), RstTree::leaf(2)]),
            RstTree::leaf(3),
        ],
    )
}

/// Small RST corpus: random n-ary trees over short EDU lists, with a fixed
/// relation inventory. Every fourth document is a test document.
pub fn rst_fixture(n_docs: usize, seed: u64) -> Vec<RstDocument> {
    const RELS: [(&str, Nuclearity); 4] = [
        ("Elaboration", Nuclearity::NS),
        ("Attribution", Nuclearity::SN),
        ("Joint", Nuclearity::NN),
        ("Contrast", Nuclearity::NN),
    ];
    fn build(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> RstTree {
        if lo == hi {
            return RstTree::leaf(lo);
        }
        let span = hi - lo + 1;
        let n_children = rng.random_range(2..=span.min(4));
        let mut cuts: Vec<usize> = rand::seq::index::sample(rng, span - 1, n_children - 1)
            .into_iter()
            .map(|c| lo + c + 1)
            .collect();
        cuts.sort_unstable();
        let mut children = Vec::new();
        let mut start = lo;
        for c in cuts.into_iter().chain([hi + 1]) {
            children.push(build(rng, start, c - 1));
            start = c;
        }
        let (rel, nuc) = RELS[rng.random_range(0..RELS.len())];
        RstTree::node(rel, nuc, children)
    }
    (0..n_docs)
        .map(|d| {
            let doc_id = format!("rst{d:03}");
            let mut rng = derive_rng(seed, &["rst", &doc_id]);
            let n = rng.random_range(3..=9);
            let edus = (1..=n).map(|i| format!("edu {i} of {doc_id}")).collect();
            RstDocument {
                split: if d % 4 == 3 { "test".into() } else { "train".into() },
                tree: build(&mut rng, 1, n),
                doc_id,
                edus,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn pseudo_words_distinct() {
        let words: HashSet<String> = (0..5000).map(pseudo_word).collect();
        assert_eq!(words.len(), 5000);
    }

    #[test]
    fn corpus_deterministic_and_sized() {
        let a = synthetic_corpus(&FixtureConfig::small(20, 1));
        let b = synthetic_corpus(&FixtureConfig::small(20, 1));
        assert_eq!(a, b);
        let mean = a.iter().map(Document::sentence_count).sum::<usize>() as f64 / 20.0;
        assert!(mean > 40.0, "{mean}");
        assert!(a.iter().all(|d| !d.categories.is_empty()));
    }

    #[test]
    fn pdtb_fixture_shape() {
        let recs = pdtb_fixture();
        assert_eq!(recs.len(), 60);
        assert_eq!(recs.iter().filter(|r| r.section == 1 || r.section == 24).count(), 4);
    }

    #[test]
    fn rst_fixture_trees_cover_edus() {
        for d in rst_fixture(10, 2) {
            assert_eq!(d.tree.leaves(), (1..=d.edus.len()).collect::<Vec<_>>());
        }
    }
}
