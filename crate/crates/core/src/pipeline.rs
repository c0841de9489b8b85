//! End-to-end orchestration shared by the `disco` binary and the examples:
//! dataset synthesis, encoder training and probing, each writing its
//! artifacts atomically under an output directory.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{build_vocab, load_word_vectors, read_word_vectors, CorpusError, Document, Thread, Vocab};
use crate::eval::{evaluate_dataset, EmbeddingSource, EvalError, EvalResult, ProbeSpec};
use crate::fixture::{
    fixture_vectors, pdtb_fixture, rst_fixture, synthetic_corpus, synthetic_papers, synthetic_threads, FixtureConfig,
};
use crate::io::{write_atomic, write_string_atomic};
use crate::nn::{load_checkpoint, EncoderDims, EncoderParams, NnError};
use crate::synth::{
    adapt_pdtb, adapt_rst, deserialize_dataset, derive_rng, serialize_dataset, split_path, synth_bso, synth_dc_docs,
    synth_dc_threads, synth_sp, synth_ssp, Dataset, DatasetSplit, EasySentenceFilter, LabelSpace, PdtbRecord,
    RstDocument, Split, SpWindowMode, SynthError, TaskKind, ThreadFilter,
};
use crate::train::{index_contexts, train_epoch, TrainError, TrainLog};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Bad arguments or missing inputs, detected before any work starts.
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

impl PipelineError {
    /// 1 for configuration and validation errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Validation(_) => 1,
            PipelineError::Eval(EvalError::MissingTask(_) | EvalError::InvalidSpec(_)) => 1,
            _ => 2,
        }
    }
}

/// Raw inputs for dataset synthesis. A task whose input is absent is
/// skipped by [`synthesize_datasets`] unless explicitly requested.
#[derive(Clone, Debug, Default)]
pub struct SynthInputs {
    /// Structured documents for SP, BSO and DC.
    pub docs: Option<Vec<Document>>,
    /// Conversation threads for the second DC domain.
    pub threads: Option<Vec<Thread>>,
    /// Papers with an Abstract section for SSP.
    pub papers: Option<Vec<Document>>,
    pub pdtb: Option<Vec<PdtbRecord>>,
    pub rst: Option<Vec<RstDocument>>,
    /// RST training documents moved to dev.
    pub rst_dev_docs: Vec<String>,
}

impl SynthInputs {
    /// Synthetic inputs large enough for `counts` on every task.
    pub fn fixture(seed: u64, counts: crate::synth::SplitCounts) -> Self {
        let total = counts.total();
        let n_docs = (total + total / 10 + 50).max(120);
        let rst = rst_fixture(40, seed);
        let mut train_ids: Vec<String> = rst.iter().filter(|d| d.split == "train").map(|d| d.doc_id.clone()).collect();
        train_ids.sort();
        train_ids.truncate(train_ids.len() / 6);
        SynthInputs {
            docs: Some(synthetic_corpus(&FixtureConfig::small(n_docs, seed))),
            threads: Some(synthetic_threads((total / 4).max(40), 12, seed)),
            papers: Some(synthetic_papers((total / 8).max(60), seed)),
            pdtb: Some(pdtb_fixture()),
            rst: Some(rst),
            rst_dev_docs: train_ids,
        }
    }
}

fn require<'a, T>(input: &'a Option<T>, what: &str, task: TaskKind) -> Result<&'a T, PipelineError> {
    input
        .as_ref()
        .ok_or_else(|| PipelineError::Validation(format!("task {task} needs {what}")))
}

fn wrap(name: &str, task: TaskKind, k: usize, splits: DatasetSplit) -> Dataset {
    Dataset {
        name: name.to_string(),
        task,
        labels: LabelSpace::numbered(name, k),
        splits,
    }
}

/// Builds every dataset (domain) of `task`.
pub fn synthesize_task(task: TaskKind, inputs: &SynthInputs, cfg: &RunConfig) -> Result<Vec<Dataset>, PipelineError> {
    let (seed, counts) = (cfg.seed, cfg.counts);
    let out = match task {
        TaskKind::Sp => {
            let docs = require(&inputs.docs, "a document corpus", task)?;
            vec![wrap("sp", task, 5, synth_sp(docs, seed, counts, SpWindowMode::FirstParagraph)?)]
        }
        TaskKind::Bso => {
            let docs = require(&inputs.docs, "a document corpus", task)?;
            vec![wrap("bso", task, 2, synth_bso(docs, seed, counts)?)]
        }
        TaskKind::Dc => {
            let mut v = Vec::new();
            if let Some(docs) = &inputs.docs {
                v.push(wrap("dc", task, 2, synth_dc_docs(docs, seed, counts, cfg.dc_candidate_pool)?));
            }
            if let Some(threads) = &inputs.threads {
                let split = synth_dc_threads(threads, seed, counts, &ThreadFilter::default())?;
                v.push(wrap("dc_threads", task, 2, split));
            }
            if v.is_empty() {
                return Err(PipelineError::Validation("task dc needs a document corpus or threads".into()));
            }
            v
        }
        TaskKind::Ssp => {
            let papers = require(&inputs.papers, "a paper corpus", task)?;
            vec![wrap("ssp", task, 2, synth_ssp(papers, seed, counts, &EasySentenceFilter::default())?)]
        }
        TaskKind::PdtbExplicit | TaskKind::PdtbImplicit => {
            let adapted = adapt_pdtb(require(&inputs.pdtb, "PDTB records", task)?)?;
            vec![if task == TaskKind::PdtbExplicit {
                adapted.explicit
            } else {
                adapted.implicit
            }]
        }
        TaskKind::Rst => {
            let docs = require(&inputs.rst, "RST documents", task)?;
            vec![adapt_rst(docs, &inputs.rst_dev_docs, cfg.rst_label_mode)?]
        }
    };
    Ok(out)
}

/// Synthesizes `cfg.tasks` and writes them under `dir`. Returns the
/// datasets in task order.
pub fn synthesize_datasets(inputs: &SynthInputs, cfg: &RunConfig, dir: &Path) -> Result<Vec<Dataset>, PipelineError> {
    let mut all = Vec::new();
    for &task in &cfg.tasks {
        all.extend(synthesize_task(task, inputs, cfg)?);
    }
    for ds in &all {
        serialize_dataset(ds, dir)?;
    }
    Ok(all)
}

/// Dataset names produced for a task.
pub fn dataset_names(task: TaskKind) -> &'static [&'static str] {
    match task {
        TaskKind::Sp => &["sp"],
        TaskKind::Bso => &["bso"],
        TaskKind::Dc => &["dc", "dc_threads"],
        TaskKind::Ssp => &["ssp"],
        TaskKind::PdtbExplicit => &["pdtb_e"],
        TaskKind::PdtbImplicit => &["pdtb_i"],
        TaskKind::Rst => &["rst"],
    }
}

/// Reads back every dataset of `tasks` found in `dir`.
pub fn load_datasets(dir: &Path, tasks: &[TaskKind]) -> Result<Vec<Dataset>, PipelineError> {
    let mut out = Vec::new();
    for &task in tasks {
        let mut found = false;
        for name in dataset_names(task) {
            if split_path(dir, name, Split::Train).exists() {
                out.push(deserialize_dataset(dir, name, task)?);
                found = true;
            }
        }
        if !found {
            return Err(PipelineError::Validation(format!(
                "no {task} dataset in {}",
                dir.display()
            )));
        }
    }
    Ok(out)
}

/// Where the encoder's word vectors come from.
#[derive(Clone, Debug)]
pub enum VectorInit {
    Random,
    File(PathBuf),
    /// Text in the word-vector file format.
    Text(String),
}

pub struct TrainedEncoder {
    pub params: EncoderParams<f32>,
    pub vocab: Vocab,
    pub log: TrainLog,
}

pub const CHECKPOINT_FILE: &str = "encoder.ckpt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const RESULTS_FILE: &str = "results.jsonl";

/// One epoch over `docs` with the run's losses and dimensions. Writes the
/// checkpoint, vocabulary and training log into `out` when given.
pub fn train_encoder(
    docs: &[Document],
    vectors: &VectorInit,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> Result<TrainedEncoder, PipelineError> {
    let vocab = build_vocab(docs, 1)?;
    let mut dims = EncoderDims::new(vocab.len(), cfg.word_dim, cfg.hidden_dim);
    dims.sent_pos_classes = cfg.spp_caps.0;
    dims.para_pos_classes = cfg.spp_caps.1;
    let mut params = EncoderParams::random(dims, &mut derive_rng(cfg.seed, &["encoder", "init"]));
    match vectors {
        VectorInit::Random => {}
        VectorInit::File(p) => params.embedding = load_word_vectors(p, &vocab, cfg.word_dim, cfg.seed)?.table,
        VectorInit::Text(t) => params.embedding = read_word_vectors(t.as_bytes(), &vocab, cfg.word_dim, cfg.seed)?.table,
    }
    let contexts = index_contexts(docs, &vocab);
    let ckpt = out.map(|d| d.join(CHECKPOINT_FILE));
    let (params, log) = train_epoch(&contexts, &cfg.loss_config(), params, ckpt.as_deref())?;
    if let Some(dir) = out {
        write_atomic(&dir.join(VOCAB_FILE), |w| vocab.write(w))?;
        log.write(&dir.join(TRAIN_LOG_FILE))?;
    }
    Ok(TrainedEncoder { params, vocab, log })
}

/// Loads a checkpoint and its vocabulary as an embedding source.
pub fn load_encoder(checkpoint: &Path, vocab: &Path) -> Result<EmbeddingSource, PipelineError> {
    let (params, _) = load_checkpoint(checkpoint)?;
    let f = File::open(vocab).map_err(|e| PipelineError::Io(format!("{}: {e}", vocab.display())))?;
    let vocab = Vocab::read(BufReader::new(f))?;
    if vocab.len() != params.dims.vocab_size {
        return Err(PipelineError::Validation(format!(
            "vocabulary has {} entries but the checkpoint expects {}",
            vocab.len(),
            params.dims.vocab_size
        )));
    }
    Ok(EmbeddingSource::Encoder { params, vocab })
}

/// Probes every dataset independently; results come back in input order.
pub fn evaluate_datasets(
    datasets: &[Dataset],
    source: &EmbeddingSource,
    cfg: &RunConfig,
) -> Result<Vec<EvalResult>, PipelineError> {
    datasets
        .par_iter()
        .map(|ds| {
            let mut spec = ProbeSpec::for_task(ds.task, ds.labels.len(), source.dim(), cfg.seed);
            spec.task = ds.name.clone();
            spec.l2_grid = cfg.probe_l2_grid.clone();
            Ok(evaluate_dataset(ds, source, &spec)?)
        })
        .collect()
}

pub fn write_results(results: &[EvalResult], path: &Path) -> Result<(), PipelineError> {
    write_atomic(path, |w: &mut dyn Write| {
        for r in results {
            writeln!(w, "{}", serde_json::to_string(r).map_err(std::io::Error::other)?)?;
        }
        Ok(())
    })?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<EvalResult>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Writes the resolved configuration next to a run's outputs.
pub fn write_effective_config(cfg: &RunConfig, dir: &Path) -> Result<PathBuf, PipelineError> {
    let p = dir.join("effective_config.toml");
    write_string_atomic(&p, &cfg.to_toml())?;
    Ok(p)
}

/// Desk-scale training corpus and matching word vectors.
pub fn fixture_training_inputs(n_docs: usize, seed: u64, word_dim: usize) -> (Vec<Document>, VectorInit) {
    let fc = FixtureConfig::training(n_docs, seed);
    (synthetic_corpus(&fc), VectorInit::Text(fixture_vectors(&fc, word_dim)))
}
