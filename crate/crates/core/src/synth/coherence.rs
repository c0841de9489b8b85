//! Discourse Coherence generators: six-sentence windows, negatives built by
//! replacing one of positions 2–5 with a sentence from another source.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use super::instance::{InstanceBody, SplitCounts};
use super::windows::{consecutive, synthesize};
use super::{DatasetSplit, SynthError};
use crate::corpus::{tokenize, Document, Thread};

pub const DC_WINDOW: usize = 6;
pub const DEFAULT_CANDIDATE_POOL: usize = 1000;

/// Jaccard overlap `|a ∩ b| / |a ∪ b|` of two category sets.
pub fn category_similarity(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<f64, SynthError> {
    if a.is_empty() {
        return Err(SynthError::EmptyCategorySet);
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    Ok(inter as f64 / union as f64)
}

/// Draws the replaced position, 1-based in `2..=5`.
fn replaced_slot<R: Rng>(rng: &mut R) -> usize {
    rng.random_range(2..=5)
}

fn replace(window: &[String], slot: usize, sentence: String) -> Vec<String> {
    let mut out = window.to_vec();
    out[slot - 1] = sentence;
    out
}

/// Picks up to `pool` other sources uniformly from `split_sources`
/// (excluding `source`).
fn candidate_pool<R: Rng>(split_sources: &[usize], source: usize, pool: usize, rng: &mut R) -> Vec<usize> {
    let others: Vec<usize> = split_sources.iter().copied().filter(|&s| s != source).collect();
    let k = pool.min(others.len());
    sample(rng, others.len(), k).into_iter().map(|i| others[i]).collect()
}

/// Document-domain DC. Distractors come from the most category-similar
/// document among a sampled pool of documents in the same split (ties
/// broken by smallest id).
pub fn synth_dc_docs(docs: &[Document], seed: u64, counts: SplitCounts, pool: usize) -> Result<DatasetSplit, SynthError> {
    let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let sentences: Vec<Vec<String>> = docs
        .iter()
        .map(|d| d.sentences().map(|s| s.raw.clone()).collect())
        .collect();
    let windows: Vec<Vec<Vec<String>>> = docs
        .iter()
        .zip(&sentences)
        .map(|(d, s)| {
            if d.categories.is_empty() {
                Vec::new()
            } else {
                consecutive(s, DC_WINDOW)
            }
        })
        .collect();

    synthesize(&ids, &windows, seed, "dc", counts, true, 2, |ctx| {
        let label = ctx.label.expect("balanced labels");
        if label == 1 {
            return Ok((
                1,
                InstanceBody::Dc {
                    sentences: ctx.window.to_vec(),
                    replaced_slot: None,
                },
            ));
        }
        let slot = replaced_slot(ctx.rng);
        let source_cats = &docs[ctx.source].categories;
        let mut best: Option<(f64, usize)> = None;
        for cand in candidate_pool(ctx.split_sources, ctx.source, pool, ctx.rng) {
            let sim = category_similarity(source_cats, &docs[cand].categories)?;
            let better = match best {
                None => true,
                Some((s, b)) => sim > s || (sim == s && ids[cand] < ids[b]),
            };
            if better {
                best = Some((sim, cand));
            }
        }
        let (_, distractor) = best.ok_or_else(|| SynthError::NoDistractorAvailable(ids[ctx.source].to_string()))?;
        let pick = &sentences[distractor][ctx.rng.random_range(0..sentences[distractor].len())];
        Ok((
            0,
            InstanceBody::Dc {
                sentences: replace(ctx.window, slot, pick.clone()),
                replaced_slot: Some(slot),
            },
        ))
    })
}

/// Utterance filter for chat threads.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreadFilter {
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Utterances starting with any of these are system messages.
    pub system_prefixes: Vec<String>,
}

impl Default for ThreadFilter {
    fn default() -> Self {
        ThreadFilter {
            min_tokens: 3,
            max_tokens: 60,
            system_prefixes: ["===", "***", "-!-", "[system]"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ThreadFilter {
    pub fn keep(&self, utterance: &str) -> bool {
        let trimmed = utterance.trim_start();
        if self.system_prefixes.iter().any(|p| trimmed.starts_with(p.as_str())) {
            return false;
        }
        let n = tokenize(utterance).len();
        (self.min_tokens..=self.max_tokens).contains(&n)
    }

    pub fn apply(&self, thread: &Thread) -> Vec<String> {
        thread.utterances.iter().filter(|u| self.keep(u)).cloned().collect()
    }
}

/// Thread-domain DC; distractors come from a different thread of the same
/// split.
pub fn synth_dc_threads(
    threads: &[Thread],
    seed: u64,
    counts: SplitCounts,
    filter: &ThreadFilter,
) -> Result<DatasetSplit, SynthError> {
    let ids: Vec<&str> = threads.iter().map(|t| t.thread_id.as_str()).collect();
    let kept: Vec<Vec<String>> = threads.iter().map(|t| filter.apply(t)).collect();
    let windows: Vec<Vec<Vec<String>>> = kept.iter().map(|u| consecutive(u, DC_WINDOW)).collect();

    let result = synthesize(&ids, &windows, seed, "dc_threads", counts, true, 2, |ctx| {
        let label = ctx.label.expect("balanced labels");
        if label == 1 {
            return Ok((
                1,
                InstanceBody::Dc {
                    sentences: ctx.window.to_vec(),
                    replaced_slot: None,
                },
            ));
        }
        let slot = replaced_slot(ctx.rng);
        let other = candidate_pool(ctx.split_sources, ctx.source, 1, ctx.rng)
            .pop()
            .ok_or_else(|| SynthError::NoDistractorAvailable(ids[ctx.source].to_string()))?;
        let pick = &kept[other][ctx.rng.random_range(0..kept[other].len())];
        Ok((
            0,
            InstanceBody::Dc {
                sentences: replace(ctx.window, slot, pick.clone()),
                replaced_slot: Some(slot),
            },
        ))
    });
    result.map_err(|e| match e {
        SynthError::InsufficientDocuments { needed, available } => SynthError::InsufficientThreads { needed, available },
        other => other,
    })
}
