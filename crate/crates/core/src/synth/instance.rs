use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynthError;

/// The seven probing tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Sp,
    Bso,
    Dc,
    Ssp,
    PdtbExplicit,
    PdtbImplicit,
    Rst,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::Sp,
        TaskKind::Bso,
        TaskKind::Dc,
        TaskKind::Ssp,
        TaskKind::PdtbExplicit,
        TaskKind::PdtbImplicit,
        TaskKind::Rst,
    ];

    /// Short name used in file names and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Sp => "sp",
            TaskKind::Bso => "bso",
            TaskKind::Dc => "dc",
            TaskKind::Ssp => "ssp",
            TaskKind::PdtbExplicit => "pdtb_e",
            TaskKind::PdtbImplicit => "pdtb_i",
            TaskKind::Rst => "rst",
        }
    }

    /// Column header used in reports.
    pub fn column(self) -> &'static str {
        match self {
            TaskKind::Sp => "SP",
            TaskKind::Bso => "BSO",
            TaskKind::Dc => "DC",
            TaskKind::Ssp => "SSP",
            TaskKind::PdtbExplicit => "PDTB-E",
            TaskKind::PdtbImplicit => "PDTB-I",
            TaskKind::Rst => "RST-DT",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('-', "_");
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name() == lower || t.column().to_ascii_lowercase().replace('-', "_") == lower)
            .ok_or_else(|| SynthError::UnknownTask(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceBody {
    /// Five sentences; slot 0 holds the moved sentence.
    Sp { sentences: Vec<String> },
    Bso { first: String, second: String },
    /// Six sentences. `replaced_slot` is the 1-based position of the
    /// substituted sentence in negatives.
    Dc { sentences: Vec<String>, replaced_slot: Option<usize> },
    Ssp { sentence: String },
    PairRel { arg1: String, arg2: String },
    RstNode { left: Vec<String>, right: Vec<String> },
}

impl InstanceBody {
    /// Sentences (or EDUs) in slot order; RST nodes list left EDUs first.
    pub fn sentences(&self) -> Vec<&str> {
        match self {
            InstanceBody::Sp { sentences } | InstanceBody::Dc { sentences, .. } => {
                sentences.iter().map(String::as_str).collect()
            }
            InstanceBody::Bso { first, second } => vec![first, second],
            InstanceBody::Ssp { sentence } => vec![sentence],
            InstanceBody::PairRel { arg1, arg2 } => vec![arg1, arg2],
            InstanceBody::RstNode { left, right } => left.iter().chain(right).map(String::as_str).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskInstance {
    pub instance_id: String,
    pub source_doc_id: String,
    pub label: usize,
    pub body: InstanceBody,
}

/// Ordered label names of a task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSpace {
    pub task: String,
    pub names: Vec<String>,
}

impl LabelSpace {
    pub fn new(task: &str, names: Vec<String>) -> Self {
        LabelSpace {
            task: task.to_string(),
            names,
        }
    }

    pub fn numbered(task: &str, k: usize) -> Self {
        Self::new(task, (0..k).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

/// Requested instance counts per split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn new(train: usize, dev: usize, test: usize) -> Self {
        SplitCounts { train, dev, test }
    }

    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }
}

impl FromStr for SplitCounts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [a, b, c] => Ok(SplitCounts::new(*a, *b, *c)),
            _ => Err(format!("expected three comma-separated counts, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<TaskInstance>,
    pub dev: Vec<TaskInstance>,
    pub test: Vec<TaskInstance>,
}

impl DatasetSplit {
    pub fn get(&self, split: Split) -> &[TaskInstance] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, split: Split) -> &mut Vec<TaskInstance> {
        match split {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Test => &mut self.test,
        }
    }

    /// Source document ids of one split.
    pub fn provenance(&self, split: Split) -> BTreeSet<&str> {
        self.get(split).iter().map(|i| i.source_doc_id.as_str()).collect()
    }

    /// Checks that no source document feeds two splits.
    pub fn check_disjoint(&self) -> Result<(), SynthError> {
        let sets: Vec<_> = Split::ALL.iter().map(|&s| self.provenance(s)).collect();
        for i in 0..3 {
            for j in i + 1..3 {
                if let Some(shared) = sets[i].intersection(&sets[j]).next() {
                    return Err(SynthError::SplitOverlap((*shared).to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn label_counts(&self, split: Split, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for inst in self.get(split) {
            if inst.label < k {
                counts[inst.label] += 1;
            }
        }
        counts
    }
}

/// A complete task dataset: name, task, labels, and splits. The name
/// distinguishes domains of one task (e.g. `dc` and `dc_threads`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub task: TaskKind,
    pub labels: LabelSpace,
    pub splits: DatasetSplit,
}
