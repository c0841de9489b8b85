//! Canonical document model, tokenization, vocabularies, pretrained word
//! vectors, and extraction of encoder training contexts.

mod context;
mod model;
mod threads;
mod tokenize;
mod vectors;
mod vocab;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use thiserror::Error;

pub use context::{context_windows, TrainingContext};
pub use model::{
    parse_corpus, serialize_corpus, write_corpus, Document, DocumentRecord, Section, SectionRecord, Sentence, MAX_LEVEL,
};
pub use threads::{parse_threads, write_threads, Thread};
pub use tokenize::tokenize;
pub use vectors::{load_word_vectors, read_word_vectors, LoadedVectors, OOV_INIT_RANGE};
pub use vocab::{build_vocab, Vocab, PAD_TOKEN, UNK_TOKEN};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: nesting level {level} outside 1..=7")]
    LevelOutOfRange { line: usize, level: i64 },
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("cannot read file: {0}")]
    UnreadableFile(String),
    #[error("{0}")]
    InvalidArgument(String),
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let f = File::open(path).map_err(|e| CorpusError::UnreadableFile(format!("{}: {e}", path.display())))?;
    parse_corpus(BufReader::new(f))
}

pub fn read_threads_file(path: &Path) -> Result<Vec<Thread>, CorpusError> {
    let f = File::open(path).map_err(|e| CorpusError::UnreadableFile(format!("{}: {e}", path.display())))?;
    parse_threads(BufReader::new(f))
}
