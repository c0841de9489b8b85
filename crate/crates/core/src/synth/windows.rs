//! Shared driver for window-based generators (SP, BSO, DC).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::alloc::{allocate_at_least, balanced_labels, derive_rng, Source};
use super::instance::{DatasetSplit, InstanceBody, Split, SplitCounts, TaskInstance};
use super::SynthError;

pub(crate) struct MakeCtx<'a> {
    /// Index of the source the window came from.
    pub source: usize,
    pub window: &'a [String],
    /// Every source allocated to the current split.
    pub split_sources: &'a [usize],
    /// Pre-drawn balanced label for binary tasks.
    pub label: Option<usize>,
    pub rng: &'a mut ChaCha8Rng,
}

/// Allocates sources to splits, samples `counts` windows per split, and
/// builds one instance per sampled window with `make`.
pub(crate) fn synthesize<M>(
    ids: &[&str],
    windows: &[Vec<Vec<String>>],
    seed: u64,
    task: &str,
    counts: SplitCounts,
    balanced: bool,
    min_sources: usize,
    mut make: M,
) -> Result<DatasetSplit, SynthError>
where
    M: FnMut(&mut MakeCtx<'_>) -> Result<(usize, InstanceBody), SynthError>,
{
    let sources: Vec<Source> = ids
        .iter()
        .zip(windows)
        .map(|(id, w)| Source { id, capacity: w.len() })
        .collect();
    let mut alloc_rng = derive_rng(seed, &[task, "allocate"]);
    let assigned = allocate_at_least(&sources, counts, min_sources, &mut alloc_rng)?;

    let mut out = DatasetSplit::default();
    let mut next_id: HashMap<usize, usize> = HashMap::new();
    for (slot, split) in Split::ALL.iter().enumerate() {
        let mut rng = derive_rng(seed, &[task, split.name()]);
        let split_sources = &assigned[slot];
        let mut candidates: Vec<(usize, usize)> = split_sources
            .iter()
            .flat_map(|&s| (0..windows[s].len()).map(move |w| (s, w)))
            .collect();
        candidates.shuffle(&mut rng);
        let n = counts.get(*split);
        candidates.truncate(n);
        let labels = if balanced { Some(balanced_labels(n, &mut rng)) } else { None };

        let dest = out.get_mut(*split);
        for (k, &(s, w)) in candidates.iter().enumerate() {
            let mut ctx = MakeCtx {
                source: s,
                window: &windows[s][w],
                split_sources,
                label: labels.as_ref().map(|l| l[k]),
                rng: &mut rng,
            };
            let (label, body) = make(&mut ctx)?;
            let counter = next_id.entry(s).or_default();
            dest.push(TaskInstance {
                instance_id: format!("{}#{}", ids[s], counter),
                source_doc_id: ids[s].to_string(),
                label,
                body,
            });
            *counter += 1;
        }
        dest.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    }
    out.check_disjoint()?;
    Ok(out)
}

/// All runs of `len` consecutive items.
pub(crate) fn consecutive<T: Clone>(items: &[T], len: usize) -> Vec<Vec<T>> {
    if items.len() < len {
        return Vec::new();
    }
    items.windows(len).map(|w| w.to_vec()).collect()
}
