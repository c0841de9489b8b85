//! Sentence Position and Binary Sentence Ordering generators.

use rand::Rng;

use super::instance::{InstanceBody, SplitCounts};
use super::windows::{consecutive, synthesize};
use super::{DatasetSplit, SynthError};
use crate::corpus::Document;

pub const SP_WINDOW: usize = 5;

/// Where SP windows are taken from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpWindowMode {
    /// First five sentences of each document's first paragraph.
    #[default]
    FirstParagraph,
    /// Any five consecutive sentences in document order.
    Anywhere,
}

/// Moves the sentence at `index` to the front; the label is `index`.
pub fn move_to_front(window: &[String], index: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(window.len());
    out.push(window[index].clone());
    out.extend(window.iter().enumerate().filter(|&(i, _)| i != index).map(|(_, s)| s.clone()));
    out
}

fn raw_sentences(doc: &Document) -> Vec<String> {
    doc.sentences().map(|s| s.raw.clone()).collect()
}

pub fn sp_windows(doc: &Document, mode: SpWindowMode) -> Vec<Vec<String>> {
    match mode {
        SpWindowMode::FirstParagraph => doc
            .paragraphs()
            .next()
            .filter(|p| p.len() >= SP_WINDOW)
            .map(|p| vec![p[..SP_WINDOW].iter().map(|s| s.raw.clone()).collect()])
            .unwrap_or_default(),
        SpWindowMode::Anywhere => consecutive(&raw_sentences(doc), SP_WINDOW),
    }
}

/// Five-sentence windows with one uniformly chosen sentence moved to slot 0.
pub fn synth_sp(docs: &[Document], seed: u64, counts: SplitCounts, mode: SpWindowMode) -> Result<DatasetSplit, SynthError> {
    let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let windows: Vec<_> = docs.iter().map(|d| sp_windows(d, mode)).collect();
    synthesize(&ids, &windows, seed, "sp", counts, false, 1, |ctx| {
        let i = ctx.rng.random_range(0..SP_WINDOW);
        Ok((
            i,
            InstanceBody::Sp {
                sentences: move_to_front(ctx.window, i),
            },
        ))
    })
}

/// Consecutive sentence pairs, half kept in order (label 1) and half
/// swapped (label 0).
pub fn synth_bso(docs: &[Document], seed: u64, counts: SplitCounts) -> Result<DatasetSplit, SynthError> {
    let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let windows: Vec<_> = docs.iter().map(|d| consecutive(&raw_sentences(d), 2)).collect();
    synthesize(&ids, &windows, seed, "bso", counts, true, 1, |ctx| {
        let label = ctx.label.expect("balanced labels");
        let (a, b) = (ctx.window[0].clone(), ctx.window[1].clone());
        let body = if label == 1 {
            InstanceBody::Bso { first: a, second: b }
        } else {
            InstanceBody::Bso { first: b, second: a }
        };
        Ok((label, body))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{synthetic_corpus, FixtureConfig};
    use crate::synth::instance::Split;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn move_to_front_rule() {
        let w = strs(&["A", "B", "C", "D", "E"]);
        assert_eq!(move_to_front(&w, 3), strs(&["D", "A", "B", "C", "E"]));
        assert_eq!(move_to_front(&w, 0), w);
    }

    #[test]
    fn sp_counts_and_labels() {
        let docs = synthetic_corpus(&FixtureConfig::small(80, 5));
        let split = synth_sp(&docs, 1, SplitCounts::new(30, 10, 10), SpWindowMode::FirstParagraph).unwrap();
        assert_eq!(split.train.len(), 30);
        assert_eq!(split.dev.len(), 10);
        split.check_disjoint().unwrap();
        for inst in &split.train {
            let InstanceBody::Sp { sentences } = &inst.body else { panic!() };
            let doc = docs.iter().find(|d| d.id == inst.source_doc_id).unwrap();
            let original: Vec<&str> = doc.paragraphs().next().unwrap()[..5].iter().map(|s| s.raw.as_str()).collect();
            assert_eq!(sentences[0], original[inst.label]);
        }
    }

    #[test]
    fn sp_insufficient() {
        let docs = synthetic_corpus(&FixtureConfig::small(10, 5));
        assert!(matches!(
            synth_sp(&docs, 1, SplitCounts::new(10, 5, 5), SpWindowMode::FirstParagraph),
            Err(SynthError::InsufficientDocuments { needed: 20, .. })
        ));
        assert!(synth_sp(&docs, 1, SplitCounts::new(10, 5, 5), SpWindowMode::Anywhere).is_ok());
    }

    #[test]
    fn bso_balance_and_order() {
        let docs = synthetic_corpus(&FixtureConfig::small(40, 6));
        let split = synth_bso(&docs, 4, SplitCounts::new(101, 20, 20)).unwrap();
        let ones = split.train.iter().filter(|i| i.label == 1).count();
        assert_eq!(ones, 51);
        assert_eq!(split.label_counts(Split::Dev, 2), vec![10, 10]);
        for inst in &split.train {
            let InstanceBody::Bso { first, second } = &inst.body else { panic!() };
            let doc = docs.iter().find(|d| d.id == inst.source_doc_id).unwrap();
            let flat: Vec<&str> = doc.sentences().map(|s| s.raw.as_str()).collect();
            let pos = |s: &str| flat.iter().position(|x| *x == s).unwrap();
            let forward = pos(second) == pos(first) + 1;
            assert_eq!(forward, inst.label == 1, "{inst:?}");
        }
    }
}
