//! Adapter for PDTB-style relation records (explicit and implicit).
//!
//! Records are JSON Lines:
//! `{"section": 3, "relation_type": "explicit", "arg1": "...", "arg2": "...",
//!   "connective": "But", "label": "Comparison.Contrast", "doc_id": "wsj_0301"}`.
//! `connective` is optional for implicit records and `doc_id` defaults to
//! the section number.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::instance::{Dataset, DatasetSplit, InstanceBody, LabelSpace, Split, TaskInstance, TaskKind};
use super::SynthError;

/// Labels with fewer training instances than this are dropped.
pub const MIN_TRAIN_INSTANCES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationType {
    Explicit,
    Implicit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdtbRecord {
    pub section: i64,
    pub relation_type: RelationType,
    pub arg1: String,
    pub arg2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connective: Option<String>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

impl PdtbRecord {
    fn doc_id(&self) -> String {
        self.doc_id.clone().unwrap_or_else(|| format!("sec{:02}", self.section))
    }
}

#[derive(Clone, Debug)]
pub struct PdtbAdapted {
    pub explicit: Dataset,
    pub implicit: Dataset,
    /// Records outside sections 2–23.
    pub dropped_out_of_range: usize,
    /// Labels removed for having too few training instances, per type.
    pub removed_explicit: Vec<String>,
    pub removed_implicit: Vec<String>,
}

/// Sections 2–14 train, 15–18 dev, 19–23 test. Sections 0, 1 and 24 exist in
/// the treebank but are not used.
pub fn split_for_section(section: i64) -> Result<Option<Split>, SynthError> {
    match section {
        2..=14 => Ok(Some(Split::Train)),
        15..=18 => Ok(Some(Split::Dev)),
        19..=23 => Ok(Some(Split::Test)),
        0 | 1 | 24 => Ok(None),
        other => Err(SynthError::UnknownSectionNumber(other)),
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

fn find_word(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    let lower = haystack.to_lowercase();
    let needle = needle.to_lowercase();
    if lower.len() != haystack.len() || needle.is_empty() {
        return haystack[from..].find(&needle).map(|i| i + from);
    }
    let mut start = from;
    while let Some(i) = lower[start..].find(&needle) {
        let at = start + i;
        let end = at + needle.len();
        let before_ok = lower[..at].chars().next_back().is_none_or(|c| !is_word_char(c));
        let after_ok = lower[end..].chars().next().is_none_or(|c| !is_word_char(c));
        if before_ok && after_ok {
            return Some(at);
        }
        start = at + lower[at..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Removes the connective from `arg2`: the leading span when `arg2` starts
/// with it, otherwise its first occurrence. Matching is case-insensitive and
/// respects word boundaries; unmatched connectives leave `arg2` unchanged.
pub fn remove_connective(arg2: &str, connective: &str) -> String {
    let conn = connective.trim();
    if conn.is_empty() {
        return arg2.to_string();
    }
    let Some(at) = find_word(arg2, conn, 0) else {
        return arg2.to_string();
    };
    let end = at + conn.len();
    let head = arg2[..at].trim_end();
    let tail = arg2[end..].trim_start_matches(',').trim_start();
    match (head.is_empty(), tail.is_empty()) {
        (true, _) => tail.to_string(),
        (false, true) => head.to_string(),
        (false, false) => format!("{head} {tail}"),
    }
}

pub fn parse_pdtb<R: BufRead>(reader: R) -> Result<Vec<PdtbRecord>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PdtbRecord = serde_json::from_str(&line).map_err(|e| SynthError::MalformedRow {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_pdtb_file(path: &Path) -> Result<Vec<PdtbRecord>, SynthError> {
    let f = File::open(path).map_err(|e| SynthError::Io(format!("{}: {e}", path.display())))?;
    parse_pdtb(BufReader::new(f))
}

fn build(
    name: &str,
    task: TaskKind,
    routed: Vec<(Split, &PdtbRecord)>,
) -> (Dataset, Vec<String>) {
    let mut train_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut all_labels: BTreeMap<&str, ()> = BTreeMap::new();
    for (split, rec) in &routed {
        all_labels.insert(&rec.label, ());
        if *split == Split::Train {
            *train_counts.entry(&rec.label).or_default() += 1;
        }
    }
    let kept: Vec<String> = train_counts
        .iter()
        .filter(|&(_, &n)| n >= MIN_TRAIN_INSTANCES)
        .map(|(l, _)| l.to_string())
        .collect();
    let removed: Vec<String> = all_labels
        .keys()
        .filter(|l| !kept.iter().any(|k| k == *l))
        .map(|l| l.to_string())
        .collect();
    let labels = LabelSpace::new(name, kept);

    let mut splits = DatasetSplit::default();
    let mut next_id: BTreeMap<String, usize> = BTreeMap::new();
    for (split, rec) in routed {
        let Some(label) = labels.index_of(&rec.label) else { continue };
        let doc_id = rec.doc_id();
        let counter = next_id.entry(doc_id.clone()).or_default();
        let arg2 = match (task, &rec.connective) {
            (TaskKind::PdtbExplicit, Some(c)) => remove_connective(&rec.arg2, c),
            _ => rec.arg2.clone(),
        };
        splits.get_mut(split).push(TaskInstance {
            instance_id: format!("{doc_id}#{counter}"),
            source_doc_id: doc_id,
            label,
            body: InstanceBody::PairRel {
                arg1: rec.arg1.clone(),
                arg2,
            },
        });
        *counter += 1;
    }
    let dataset = Dataset {
        name: name.to_string(),
        task,
        labels,
        splits,
    };
    (dataset, removed)
}

/// Routes records by section, drops unused sections, and builds the explicit
/// and implicit datasets with independent label spaces (names sorted).
pub fn adapt_pdtb(records: &[PdtbRecord]) -> Result<PdtbAdapted, SynthError> {
    let mut explicit = Vec::new();
    let mut implicit = Vec::new();
    let mut dropped = 0;
    for rec in records {
        match split_for_section(rec.section)? {
            None => dropped += 1,
            Some(split) => match rec.relation_type {
                RelationType::Explicit => explicit.push((split, rec)),
                RelationType::Implicit => implicit.push((split, rec)),
            },
        }
    }
    let (explicit, removed_explicit) = build("pdtb_e", TaskKind::PdtbExplicit, explicit);
    let (implicit, removed_implicit) = build("pdtb_i", TaskKind::PdtbImplicit, implicit);
    Ok(PdtbAdapted {
        explicit,
        implicit,
        dropped_out_of_range: dropped,
        removed_explicit,
        removed_implicit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(section: i64, ty: RelationType, label: &str) -> PdtbRecord {
        PdtbRecord {
            section,
            relation_type: ty,
            arg1: "first argument".into(),
            arg2: "But second argument".into(),
            connective: Some("But".into()),
            label: label.into(),
            doc_id: None,
        }
    }

    #[test]
    fn section_routing() {
        assert_eq!(split_for_section(3).unwrap(), Some(Split::Train));
        assert_eq!(split_for_section(14).unwrap(), Some(Split::Train));
        assert_eq!(split_for_section(16).unwrap(), Some(Split::Dev));
        assert_eq!(split_for_section(21).unwrap(), Some(Split::Test));
        assert_eq!(split_for_section(1).unwrap(), None);
        assert_eq!(split_for_section(24).unwrap(), None);
        assert!(matches!(split_for_section(25), Err(SynthError::UnknownSectionNumber(25))));
    }

    #[test]
    fn connective_prefix_removed() {
        let s2 = "But it remains to be seen whether their ads will be any more effective.";
        assert_eq!(
            remove_connective(s2, "But"),
            "it remains to be seen whether their ads will be any more effective."
        );
    }

    #[test]
    fn connective_inside_and_missing() {
        assert_eq!(remove_connective("prices rose, however, sharply", "however"), "prices rose, sharply");
        assert_eq!(remove_connective("Butter is good", "But"), "Butter is good");
        assert_eq!(remove_connective("In fact, it rained", "in fact"), "it rained");
    }

    #[test]
    fn sparse_labels_removed_everywhere() {
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(rec(2 + (i % 13), RelationType::Explicit, "Comparison.Contrast"));
        }
        for i in 0..9 {
            records.push(rec(2 + (i % 13), RelationType::Explicit, "Comparison.Concession"));
        }
        records.push(rec(16, RelationType::Explicit, "Comparison.Concession"));
        records.push(rec(16, RelationType::Explicit, "Comparison.Contrast"));
        records.push(rec(0, RelationType::Explicit, "Comparison.Contrast"));
        let out = adapt_pdtb(&records).unwrap();
        assert_eq!(out.dropped_out_of_range, 1);
        assert_eq!(out.explicit.labels.names, vec!["Comparison.Contrast".to_string()]);
        assert_eq!(out.removed_explicit, vec!["Comparison.Concession".to_string()]);
        assert_eq!(out.explicit.splits.train.len(), 10);
        assert_eq!(out.explicit.splits.dev.len(), 1);
        assert!(out.implicit.splits.train.is_empty());
        for inst in &out.explicit.splits.train {
            let InstanceBody::PairRel { arg2, .. } = &inst.body else { panic!() };
            assert_eq!(arg2, "second argument");
        }
    }

    #[test]
    fn implicit_keeps_arg2() {
        let mut records: Vec<PdtbRecord> = (0..10).map(|_| rec(5, RelationType::Implicit, "Expansion.Conjunction")).collect();
        records[0].connective = None;
        let out = adapt_pdtb(&records).unwrap();
        let InstanceBody::PairRel { arg2, .. } = &out.implicit.splits.train[1].body else { panic!() };
        assert_eq!(arg2, "But second argument");
        assert_eq!(out.implicit.splits.train[3].instance_id, "sec05#3");
    }
}
