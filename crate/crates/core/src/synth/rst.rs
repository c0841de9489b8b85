//! Adapter for RST-style discourse trees: right-branching binarization and
//! one relation instance per internal node.
//!
//! A tree is either a leaf `{"edu": 3}` (1-based) or an internal node
//! `{"relation": "Attribution", "nuclearity": "NN", "children": [...]}`.
//! Documents are JSON Lines `{"doc_id", "split": "train"|"test", "edus", "tree"}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::alloc::split_by_document;
use super::instance::{Dataset, InstanceBody, LabelSpace, Split, TaskInstance, TaskKind};
use super::SynthError;

pub const COARSE_RELATIONS: [&str; 18] = [
    "Attribution",
    "Background",
    "Cause",
    "Comparison",
    "Condition",
    "Contrast",
    "Elaboration",
    "Enablement",
    "Evaluation",
    "Explanation",
    "Joint",
    "Manner-Means",
    "Same-unit",
    "Summary",
    "Temporal",
    "Textual-organization",
    "Topic-Change",
    "Topic-Comment",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nuclearity {
    #[serde(rename = "NN")]
    NN,
    #[serde(rename = "NS")]
    NS,
    #[serde(rename = "SN")]
    SN,
}

impl Nuclearity {
    pub fn as_str(self) -> &'static str {
        match self {
            Nuclearity::NN => "NN",
            Nuclearity::NS => "NS",
            Nuclearity::SN => "SN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RstTree {
    Leaf {
        edu: usize,
    },
    Node {
        relation: String,
        nuclearity: Nuclearity,
        children: Vec<RstTree>,
    },
}

impl RstTree {
    pub fn leaf(edu: usize) -> Self {
        RstTree::Leaf { edu }
    }

    pub fn node(relation: &str, nuclearity: Nuclearity, children: Vec<RstTree>) -> Self {
        RstTree::Node {
            relation: relation.to_string(),
            nuclearity,
            children,
        }
    }

    /// EDU indices in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            RstTree::Leaf { edu } => out.push(*edu),
            RstTree::Node { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    pub fn internal_nodes(&self) -> usize {
        match self {
            RstTree::Leaf { .. } => 0,
            RstTree::Node { children, .. } => 1 + children.iter().map(RstTree::internal_nodes).sum::<usize>(),
        }
    }

    pub fn is_binary(&self) -> bool {
        match self {
            RstTree::Leaf { .. } => true,
            RstTree::Node { children, .. } => children.len() == 2 && children.iter().all(RstTree::is_binary),
        }
    }
}

/// Rewrites every node `(c1, …, cn)` as `(c1, (c2, …, cn))` recursively.
/// Inserted nodes copy the relation and nuclearity of the node they split.
pub fn binarize_rst(tree: &RstTree) -> Result<RstTree, SynthError> {
    match tree {
        RstTree::Leaf { edu } => Ok(RstTree::leaf(*edu)),
        RstTree::Node {
            relation,
            nuclearity,
            children,
        } => {
            match children.len() {
                0 => return Err(SynthError::EmptySpan),
                1 => return Err(SynthError::UnaryNode),
                _ => {}
            }
            let bin: Vec<RstTree> = children.iter().map(binarize_rst).collect::<Result<_, _>>()?;
            let mut iter = bin.into_iter().rev();
            let mut right = iter.next().expect("at least two children");
            for left in iter {
                right = RstTree::node(relation, *nuclearity, vec![left, right]);
            }
            Ok(right)
        }
    }
}

/// How node labels are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RstLabelMode {
    /// Coarse relation only (18 classes).
    Relation,
    /// Nuclearity prefix plus relation, e.g. `NN-Attribution`.
    #[default]
    NuclearityRelation,
}

impl FromStr for RstLabelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relation" => Ok(RstLabelMode::Relation),
            "nuclearity_relation" => Ok(RstLabelMode::NuclearityRelation),
            other => Err(format!("expected \"relation\" or \"nuclearity_relation\", got {other:?}")),
        }
    }
}

fn canonical_relation(name: &str) -> Result<&'static str, SynthError> {
    COARSE_RELATIONS
        .iter()
        .find(|r| r.eq_ignore_ascii_case(name))
        .copied()
        .ok_or_else(|| SynthError::UnknownRelation(name.to_string()))
}

/// One internal node: the EDU spans (1-based) of its two children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RstNodeInstance {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub label: String,
}

/// Pre-order list of internal nodes of a binary tree over `n_edus` EDUs.
pub fn extract_rst_instances(
    tree: &RstTree,
    n_edus: usize,
    mode: RstLabelMode,
) -> Result<Vec<RstNodeInstance>, SynthError> {
    let mut out = Vec::new();
    walk(tree, n_edus, mode, &mut out)?;
    Ok(out)
}

fn walk(tree: &RstTree, n_edus: usize, mode: RstLabelMode, out: &mut Vec<RstNodeInstance>) -> Result<(), SynthError> {
    match tree {
        RstTree::Leaf { edu } => {
            if *edu == 0 || *edu > n_edus {
                return Err(SynthError::EduOutOfRange(*edu));
            }
            Ok(())
        }
        RstTree::Node {
            relation,
            nuclearity,
            children,
        } => {
            let [l, r] = children.as_slice() else {
                return Err(SynthError::NotBinary);
            };
            let relation = canonical_relation(relation)?;
            let label = match mode {
                RstLabelMode::Relation => relation.to_string(),
                RstLabelMode::NuclearityRelation => format!("{}-{}", nuclearity.as_str(), relation),
            };
            let (left, right) = (l.leaves(), r.leaves());
            if left.is_empty() || right.is_empty() {
                return Err(SynthError::EmptySpan);
            }
            out.push(RstNodeInstance { left, right, label });
            walk(l, n_edus, mode, out)?;
            walk(r, n_edus, mode, out)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RstDocument {
    pub doc_id: String,
    /// "train" or "test"; dev documents are carved out of train.
    pub split: String,
    pub edus: Vec<String>,
    pub tree: RstTree,
}

pub fn parse_rst<R: BufRead>(reader: R) -> Result<Vec<RstDocument>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RstDocument = serde_json::from_str(&line).map_err(|e| SynthError::MalformedRow {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if doc.split != "train" && doc.split != "test" {
            return Err(SynthError::MalformedRow {
                line: i + 1,
                reason: format!("split must be \"train\" or \"test\", got {:?}", doc.split),
            });
        }
        out.push(doc);
    }
    Ok(out)
}

pub fn read_rst_file(path: &Path) -> Result<Vec<RstDocument>, SynthError> {
    let f = File::open(path).map_err(|e| SynthError::Io(format!("{}: {e}", path.display())))?;
    parse_rst(BufReader::new(f))
}

/// Builds the RST dataset. Training documents listed in `dev_docs` form the
/// dev split. In nuclearity+relation mode the label space is every label seen
/// in training (sorted); nodes with labels outside it are dropped.
pub fn adapt_rst(docs: &[RstDocument], dev_docs: &[String], mode: RstLabelMode) -> Result<Dataset, SynthError> {
    let mut assignment: BTreeMap<String, Split> = BTreeMap::new();
    for d in docs {
        let split = if d.split == "test" { Split::Test } else { Split::Train };
        assignment.insert(d.doc_id.clone(), split);
    }
    for id in dev_docs {
        match assignment.get_mut(id) {
            Some(s @ Split::Train) => *s = Split::Dev,
            _ => return Err(SynthError::UnassignedDocument(id.clone())),
        }
    }

    let mut extracted = Vec::new();
    for d in docs {
        let bin = binarize_rst(&d.tree)?;
        for node in extract_rst_instances(&bin, d.edus.len(), mode)? {
            extracted.push((d, node));
        }
    }

    let names: Vec<String> = match mode {
        RstLabelMode::Relation => COARSE_RELATIONS.iter().map(|s| s.to_string()).collect(),
        RstLabelMode::NuclearityRelation => extracted
            .iter()
            .filter(|(d, _)| assignment[&d.doc_id] == Split::Train)
            .map(|(_, n)| n.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let labels = LabelSpace::new("rst", names);

    let mut next_id: BTreeMap<&str, usize> = BTreeMap::new();
    let mut instances = Vec::new();
    for (d, node) in extracted {
        let Some(label) = labels.index_of(&node.label) else { continue };
        let counter = next_id.entry(&d.doc_id).or_default();
        let text = |ids: &[usize]| ids.iter().map(|&i| d.edus[i - 1].clone()).collect::<Vec<_>>();
        instances.push(TaskInstance {
            instance_id: format!("{}#{}", d.doc_id, counter),
            source_doc_id: d.doc_id.clone(),
            label,
            body: InstanceBody::RstNode {
                left: text(&node.left),
                right: text(&node.right),
            },
        });
        *counter += 1;
    }
    Ok(Dataset {
        name: "rst".to_string(),
        task: TaskKind::Rst,
        labels,
        splits: split_by_document(instances, &assignment)?,
    })
}
