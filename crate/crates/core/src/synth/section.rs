//! Sentence Section Prediction: Abstract (label 1) versus a middle section
//! (label 0).

use std::collections::HashMap;

use rand::seq::SliceRandom;

use super::alloc::{allocate, derive_rng, Source};
use super::instance::{DatasetSplit, InstanceBody, Split, SplitCounts, TaskInstance};
use super::SynthError;
use crate::corpus::{Document, Section, Sentence};

/// Drops sentences that are trivially classified (equations, fragments).
#[derive(Clone, Debug, PartialEq)]
pub struct EasySentenceFilter {
    pub min_tokens: usize,
    /// Maximum fraction of non-alphabetic characters (whitespace included).
    pub max_non_alpha: f64,
}

impl Default for EasySentenceFilter {
    fn default() -> Self {
        EasySentenceFilter {
            min_tokens: 5,
            max_non_alpha: 0.4,
        }
    }
}

pub fn non_alpha_fraction(raw: &str) -> f64 {
    let total = raw.chars().count();
    if total == 0 {
        return 1.0;
    }
    let non_alpha = raw.chars().filter(|c| !c.is_alphabetic()).count();
    non_alpha as f64 / total as f64
}

impl EasySentenceFilter {
    pub fn keep(&self, s: &Sentence) -> bool {
        s.tokens.len() >= self.min_tokens && non_alpha_fraction(&s.raw) <= self.max_non_alpha
    }
}

fn title_is(section: &Section, word: &str) -> bool {
    section.title_tokens.iter().any(|t| t.starts_with(word))
}

fn is_abstract(section: &Section) -> bool {
    section.title.trim().eq_ignore_ascii_case("abstract")
}

/// Abstract sentences and middle-section sentences of one paper, after
/// filtering. Middle sections are neither first nor last and not titled
/// Introduction or Conclusion.
pub fn ssp_candidates(doc: &Document, filter: &EasySentenceFilter) -> Result<(Vec<String>, Vec<String>), SynthError> {
    let abstract_idx = doc
        .sections
        .iter()
        .position(is_abstract)
        .ok_or_else(|| SynthError::NoAbstract(doc.id.clone()))?;
    let collect = |s: &Section| -> Vec<String> {
        s.paragraphs
            .iter()
            .flatten()
            .filter(|x| filter.keep(x))
            .map(|x| x.raw.clone())
            .collect()
    };
    let positives = collect(&doc.sections[abstract_idx]);
    let last = doc.sections.len() - 1;
    let negatives = doc
        .sections
        .iter()
        .enumerate()
        .filter(|&(i, s)| {
            i != 0 && i != last && i != abstract_idx && !title_is(s, "introduction") && !title_is(s, "conclusion")
        })
        .flat_map(|(_, s)| collect(s))
        .collect();
    Ok((positives, negatives))
}

pub fn synth_ssp(
    papers: &[Document],
    seed: u64,
    counts: SplitCounts,
    filter: &EasySentenceFilter,
) -> Result<DatasetSplit, SynthError> {
    let candidates: Vec<(Vec<String>, Vec<String>)> = papers
        .iter()
        .map(|d| ssp_candidates(d, filter))
        .collect::<Result<_, _>>()?;
    let sources: Vec<Source> = papers
        .iter()
        .zip(&candidates)
        .map(|(d, (p, n))| Source {
            id: &d.id,
            capacity: 2 * p.len().min(n.len()),
        })
        .collect();
    let mut alloc_rng = derive_rng(seed, &["ssp", "allocate"]);
    let assigned = allocate(&sources, counts, &mut alloc_rng)?;

    let mut out = DatasetSplit::default();
    let mut next_id: HashMap<usize, usize> = HashMap::new();
    for (slot, split) in Split::ALL.iter().enumerate() {
        let mut rng = derive_rng(seed, &["ssp", split.name()]);
        let n = counts.get(*split);
        let mut pos: Vec<(usize, &String)> = Vec::new();
        let mut neg: Vec<(usize, &String)> = Vec::new();
        for &s in &assigned[slot] {
            pos.extend(candidates[s].0.iter().map(|x| (s, x)));
            neg.extend(candidates[s].1.iter().map(|x| (s, x)));
        }
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let n_pos = n.div_ceil(2);
        let n_neg = n / 2;
        if pos.len() < n_pos || neg.len() < n_neg {
            return Err(SynthError::InsufficientDocuments {
                needed: counts.total(),
                available: sources.iter().map(|s| s.capacity).sum(),
            });
        }
        let mut picked: Vec<(usize, usize, &String)> = pos[..n_pos]
            .iter()
            .map(|&(s, x)| (1, s, x))
            .chain(neg[..n_neg].iter().map(|&(s, x)| (0, s, x)))
            .collect();
        picked.shuffle(&mut rng);
        let dest = out.get_mut(*split);
        for (label, s, sentence) in picked {
            let counter = next_id.entry(s).or_default();
            *counter += 1;
            dest.push(TaskInstance {
                instance_id: format!("{}#{}", papers[s].id, *counter - 1),
                source_doc_id: papers[s].id.clone(),
                label,
                body: InstanceBody::Ssp {
                    sentence: sentence.clone(),
                },
            });
        }
        dest.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    }
    out.check_disjoint()?;
    Ok(out)
}
