//! Frozen-encoder probing: instance embeddings (from a trained encoder or a
//! precomputed cache), per-task feature constructions, probe classifiers,
//! accuracies and benchmark reports.

mod embed;
mod features;
mod probe;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{embed_instances, EmbeddingCache, EmbeddingSource, InstanceEmbedding};
pub use features::{build_features, FeatureConstruction};
pub use probe::{
    evaluate_probe, probe_loss, train_probe, HiddenLayer, LabeledFeatures, Probe, ProbeSpec, TrainedProbe,
};
pub use report::{make_report, write_report, Report};

use crate::nn::NnError;
use crate::synth::{Dataset, Split, TaskKind};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no embedding for instance {0:?}")]
    MissingEmbedding(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("{construction} expects {expected} vectors, got {got}")]
    WrongArity {
        construction: String,
        expected: usize,
        got: usize,
    },
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("no result for task {0}")]
    MissingTask(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid probe specification: {0}")]
    InvalidSpec(String),
    #[error("line {line}: malformed embedding cache row: {reason}")]
    MalformedCache { line: usize, reason: String },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

/// Accuracy of one probe on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Dataset name; domains of one task have distinct names.
    pub dataset: String,
    pub task: TaskKind,
    pub dev_accuracy: f64,
    pub test_accuracy: f64,
    pub l2: f64,
    pub seed: u64,
    pub feature_dim: usize,
}

/// Features and labels of one split.
pub fn split_features(
    ds: &Dataset,
    split: Split,
    source: &EmbeddingSource,
    construction: FeatureConstruction,
) -> Result<LabeledFeatures, EvalError> {
    let instances = ds.splits.get(split);
    let embedded = embed_instances(instances, source)?;
    let mut x = Vec::with_capacity(instances.len());
    for e in &embedded {
        x.push(build_features(&e.vectors, construction)?);
    }
    Ok(LabeledFeatures {
        x,
        y: instances.iter().map(|i| i.label).collect(),
    })
}

/// Embeds a dataset, trains its probe on train (selecting L2 on dev) and
/// scores it on test.
pub fn evaluate_dataset(ds: &Dataset, source: &EmbeddingSource, spec: &ProbeSpec) -> Result<EvalResult, EvalError> {
    let train = split_features(ds, Split::Train, source, spec.construction)?;
    let dev = split_features(ds, Split::Dev, source, spec.construction)?;
    let test = split_features(ds, Split::Test, source, spec.construction)?;
    let trained = train_probe(&train, &dev, spec)?;
    let test_accuracy = evaluate_probe(&trained.probe, &test)?;
    Ok(EvalResult {
        dataset: ds.name.clone(),
        task: ds.task,
        dev_accuracy: trained.dev_accuracy,
        test_accuracy,
        l2: trained.l2,
        seed: spec.seed,
        feature_dim: train.x.first().map_or(0, Vec::len),
    })
}
