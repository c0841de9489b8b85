//! Probing-task synthesis from corpora and adapters for annotated
//! discourse-relation fixtures.

mod alloc;
mod coherence;
mod instance;
mod ordering;
mod pdtb;
mod rst;
mod section;
mod tsv;
mod windows;

use thiserror::Error;

pub use alloc::{allocate, allocate_at_least, balanced_labels, derive_rng, split_by_document, Source};
pub use coherence::{
    category_similarity, synth_dc_docs, synth_dc_threads, ThreadFilter, DC_WINDOW, DEFAULT_CANDIDATE_POOL,
};
pub use instance::{Dataset, DatasetSplit, InstanceBody, LabelSpace, Split, SplitCounts, TaskInstance, TaskKind};
pub use ordering::{move_to_front, sp_windows, synth_bso, synth_sp, SpWindowMode, SP_WINDOW};
pub use pdtb::{
    adapt_pdtb, parse_pdtb, read_pdtb_file, remove_connective, split_for_section, PdtbAdapted, PdtbRecord,
    RelationType, MIN_TRAIN_INSTANCES,
};
pub use rst::{
    adapt_rst, binarize_rst, extract_rst_instances, parse_rst, read_rst_file, Nuclearity, RstDocument, RstLabelMode,
    RstNodeInstance, RstTree, COARSE_RELATIONS,
};
pub use section::{non_alpha_fraction, ssp_candidates, synth_ssp, EasySentenceFilter};
pub use tsv::{
    deserialize_dataset, format_row, format_split, labels_path, parse_row, parse_split, serialize_dataset, split_path,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("insufficient documents: need {needed} instances, sources can supply {available}")]
    InsufficientDocuments { needed: usize, available: usize },
    #[error("insufficient threads: need {needed} instances, threads can supply {available}")]
    InsufficientThreads { needed: usize, available: usize },
    #[error("no distractor document available for {0:?}")]
    NoDistractorAvailable(String),
    #[error("empty category set")]
    EmptyCategorySet,
    #[error("paper {0:?} has no Abstract section")]
    NoAbstract(String),
    #[error("section number {0} is not a treebank section")]
    UnknownSectionNumber(i64),
    #[error("tree node has a single child")]
    UnaryNode,
    #[error("tree is not binary")]
    NotBinary,
    #[error("node spans no EDUs")]
    EmptySpan,
    #[error("EDU index {0} out of range")]
    EduOutOfRange(usize),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("document {0:?} is not assigned to any split")]
    UnassignedDocument(String),
    #[error("document {0:?} appears in more than one split")]
    SplitOverlap(String),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SynthError {
    fn from(e: std::io::Error) -> Self {
        SynthError::Io(e.to_string())
    }
}
