//! Seed derivation, document-to-split allocation, and routing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::instance::{DatasetSplit, Split, SplitCounts, TaskInstance};
use super::SynthError;

/// Independent RNG stream for `(seed, parts…)`.
pub fn derive_rng(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

/// A document (or thread) able to supply up to `capacity` instances.
#[derive(Clone, Debug)]
pub struct Source<'a> {
    pub id: &'a str,
    pub capacity: usize,
}

/// Shuffles sources (after sorting by id) and hands them out greedily to
/// train, then dev, then test until each split's capacity covers its count.
/// Returns source indices per split in allocation order.
pub fn allocate(sources: &[Source<'_>], counts: SplitCounts, rng: &mut ChaCha8Rng) -> Result<[Vec<usize>; 3], SynthError> {
    allocate_at_least(sources, counts, 1, rng)
}

/// As [`allocate`], but every nonempty split receives at least
/// `min_sources` sources (DC needs a second document for distractors).
pub fn allocate_at_least(
    sources: &[Source<'_>],
    counts: SplitCounts,
    min_sources: usize,
    rng: &mut ChaCha8Rng,
) -> Result<[Vec<usize>; 3], SynthError> {
    let mut order: Vec<usize> = (0..sources.len()).filter(|&i| sources[i].capacity > 0).collect();
    order.sort_by(|&a, &b| sources[a].id.cmp(sources[b].id));
    order.shuffle(rng);

    let available: usize = order.iter().map(|&i| sources[i].capacity).sum();
    let insufficient = || SynthError::InsufficientDocuments {
        needed: counts.total(),
        available,
    };
    let mut out: [Vec<usize>; 3] = Default::default();
    let mut it = order.into_iter();
    for (slot, split) in Split::ALL.iter().enumerate() {
        let want = counts.get(*split);
        let mut have = 0;
        while have < want || (want > 0 && out[slot].len() < min_sources) {
            let i = it.next().ok_or_else(insufficient)?;
            have += sources[i].capacity;
            out[slot].push(i);
        }
    }
    Ok(out)
}

/// Routes instances to splits by their source document.
pub fn split_by_document(
    instances: Vec<TaskInstance>,
    assignment: &BTreeMap<String, Split>,
) -> Result<DatasetSplit, SynthError> {
    let mut out = DatasetSplit::default();
    for inst in instances {
        let split = *assignment
            .get(&inst.source_doc_id)
            .ok_or_else(|| SynthError::UnassignedDocument(inst.source_doc_id.clone()))?;
        out.get_mut(split).push(inst);
    }
    out.check_disjoint()?;
    Ok(out)
}

/// Balanced binary labels: `⌈n/2⌉` ones and `⌊n/2⌋` zeros, shuffled.
pub fn balanced_labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i < n.div_ceil(2))).collect();
    labels.shuffle(rng);
    labels
}
