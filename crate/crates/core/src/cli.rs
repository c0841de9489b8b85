//! The `disco` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toml::{Table, Value};

use crate::config::{load_config, RunConfig};
use crate::corpus::{read_corpus_file, read_threads_file, Document};
use crate::eval::{make_report, write_report, EmbeddingCache, EmbeddingSource, HiddenLayer, LabeledFeatures, Probe};
use crate::nn::{grad_check, EncoderDims, EncoderParams, GradCheckOptions, Parameters};
use crate::pipeline::{
    evaluate_datasets, fixture_training_inputs, load_datasets, load_encoder, read_results, synthesize_datasets,
    train_encoder, write_effective_config, write_results, PipelineError, SynthInputs, VectorInit, CHECKPOINT_FILE,
    RESULTS_FILE, VOCAB_FILE,
};
use crate::synth::{read_pdtb_file, read_rst_file, SplitCounts, TaskKind};
use crate::train::{accumulate_context, IndexedContext, LossKind};

#[derive(Parser, Debug)]
#[command(name = "disco", version, about = "Discourse probing datasets, encoder training and evaluation")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// desk or paper.
    #[arg(long, global = true)]
    profile: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate probing datasets.
    Synth(SynthArgs),
    /// Train the encoder for one epoch.
    Train(TrainArgs),
    /// Probe a frozen encoder or an embedding cache.
    Eval(EvalArgs),
    /// Build report.csv and report.txt from evaluation results.
    Report(ReportArgs),
    /// Gradient and determinism checks.
    Selftest,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Task name, or "all".
    #[arg(long, default_value = "all")]
    task: String,
    /// train,dev,test
    #[arg(long)]
    counts: Option<String>,
    /// Documents (JSONL) for SP, BSO and DC.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Conversation threads (JSONL) for DC.
    #[arg(long)]
    threads: Option<PathBuf>,
    /// Papers (JSONL documents) for SSP.
    #[arg(long)]
    papers: Option<PathBuf>,
    /// Relation records (JSONL).
    #[arg(long)]
    pdtb: Option<PathBuf>,
    /// RST documents (JSONL).
    #[arg(long)]
    rst: Option<PathBuf>,
    /// Comma-separated RST training documents to use as dev.
    #[arg(long, value_delimiter = ',')]
    rst_dev_docs: Vec<String>,
    /// Use generated fixture inputs for anything not given.
    #[arg(long)]
    fixture: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Word vectors, `token v1 … vd` per line.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Comma-separated losses (NSP is always on).
    #[arg(long)]
    losses: Option<String>,
    /// Train on a generated corpus of this many documents.
    #[arg(long)]
    fixture: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, default_value = "all")]
    task: String,
    /// Directory holding the dataset files (default: <out>/data).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Precomputed embedding cache.
    #[arg(long, conflicts_with = "checkpoint")]
    embeddings: Option<PathBuf>,
    /// Encoder checkpoint (default: <out>/encoder.ckpt).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Vocabulary of the checkpoint (default: next to it).
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, default_value = "all")]
    task: String,
    /// Evaluation results (default: <out>/results.jsonl).
    #[arg(long)]
    results: Option<PathBuf>,
}

fn validation(msg: impl Into<String>) -> PipelineError {
    PipelineError::Validation(msg.into())
}

fn task_list(spec: &str) -> Result<Value, PipelineError> {
    let items: Vec<Value> = spec
        .split(',')
        .map(|t| {
            let t = t.trim();
            if t != "all" {
                t.parse::<TaskKind>().map_err(|e| validation(e.to_string()))?;
            }
            Ok(Value::String(t.to_string()))
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(Value::Array(items))
}

fn overrides(cli: &Cli) -> Result<Table, PipelineError> {
    let mut t = Table::new();
    if let Some(s) = cli.seed {
        t.insert("seed".into(), Value::Integer(s as i64));
    }
    if let Some(o) = &cli.out {
        t.insert("out_dir".into(), Value::String(o.display().to_string()));
    }
    if let Some(p) = &cli.profile {
        t.insert("profile".into(), Value::String(p.clone()));
    }
    let path = |p: &Path| Value::String(p.display().to_string());
    match &cli.command {
        Command::Synth(a) => {
            t.insert("tasks".into(), task_list(&a.task)?);
            if let Some(c) = &a.counts {
                let c: SplitCounts = c.parse().map_err(|e: String| validation(format!("--counts: {e}")))?;
                let v = [c.train, c.dev, c.test].iter().map(|&n| Value::Integer(n as i64)).collect();
                t.insert("counts".into(), Value::Array(v));
            }
            if let Some(p) = &a.corpus {
                t.insert("corpus_path".into(), path(p));
            }
        }
        Command::Train(a) => {
            if let Some(p) = &a.corpus {
                t.insert("corpus_path".into(), path(p));
            }
            if let Some(p) = &a.vectors {
                t.insert("vectors_path".into(), path(p));
            }
            if let Some(l) = &a.losses {
                let v = l.split(',').map(|s| Value::String(s.trim().to_string())).collect();
                t.insert("losses".into(), Value::Array(v));
            }
        }
        Command::Eval(a) => {
            t.insert("tasks".into(), task_list(&a.task)?);
        }
        Command::Report(a) => {
            t.insert("tasks".into(), task_list(&a.task)?);
        }
        Command::Selftest => {}
    }
    Ok(t)
}

fn existing(p: &Path) -> Result<&Path, PipelineError> {
    if p.exists() {
        Ok(p)
    } else {
        Err(PipelineError::Config(crate::config::ConfigError::MissingPath(p.to_path_buf())))
    }
}

fn run_synth(a: &SynthArgs, cfg: &RunConfig) -> Result<(), PipelineError> {
    let mut inputs = if a.fixture {
        SynthInputs::fixture(cfg.seed, cfg.counts)
    } else {
        SynthInputs::default()
    };
    if let Some(p) = &cfg.corpus_path {
        inputs.docs = Some(read_corpus_file(p)?);
    }
    if let Some(p) = &a.threads {
        inputs.threads = Some(read_threads_file(existing(p)?)?);
    }
    if let Some(p) = &a.papers {
        inputs.papers = Some(read_corpus_file(existing(p)?)?);
    }
    if let Some(p) = &a.pdtb {
        inputs.pdtb = Some(read_pdtb_file(existing(p)?)?);
    }
    if let Some(p) = &a.rst {
        inputs.rst = Some(read_rst_file(existing(p)?)?);
        inputs.rst_dev_docs = a.rst_dev_docs.clone();
    }
    let dir = cfg.out_dir.join("data");
    let datasets = synthesize_datasets(&inputs, cfg, &dir)?;
    for ds in &datasets {
        println!(
            "{}: train {} dev {} test {} ({} labels)",
            ds.name,
            ds.splits.train.len(),
            ds.splits.dev.len(),
            ds.splits.test.len(),
            ds.labels.len()
        );
    }
    Ok(())
}

fn run_train(a: &TrainArgs, cfg: &RunConfig) -> Result<(), PipelineError> {
    let (docs, mut vectors): (Vec<Document>, VectorInit) = match (&cfg.corpus_path, a.fixture) {
        (Some(p), _) => (read_corpus_file(p)?, VectorInit::Random),
        (None, Some(n)) => fixture_training_inputs(n, cfg.seed, cfg.word_dim),
        (None, None) => return Err(validation("train needs --corpus, corpus_path or --fixture N")),
    };
    if let Some(p) = &cfg.vectors_path {
        vectors = VectorInit::File(p.clone());
    }
    let t = Instant::now();
    let trained = train_encoder(&docs, &vectors, cfg, Some(&cfg.out_dir))?;
    for kind in &cfg.losses {
        if let Some((first, last)) = trained.log.first_last_means(kind.name(), 100) {
            println!("{kind}: first-100 mean {first:.4}, last-100 mean {last:.4}");
        }
    }
    println!(
        "{} steps in {:.1?}; checkpoint {}",
        trained.log.steps,
        t.elapsed(),
        cfg.out_dir.join(CHECKPOINT_FILE).display()
    );
    Ok(())
}

fn run_eval(a: &EvalArgs, cfg: &RunConfig) -> Result<(), PipelineError> {
    let data = a.data.clone().unwrap_or_else(|| cfg.out_dir.join("data"));
    let source = match &a.embeddings {
        Some(p) => EmbeddingSource::Cache(EmbeddingCache::read(existing(p)?)?),
        None => {
            let ckpt = a.checkpoint.clone().unwrap_or_else(|| cfg.out_dir.join(CHECKPOINT_FILE));
            let vocab = a
                .vocab
                .clone()
                .unwrap_or_else(|| ckpt.parent().unwrap_or(Path::new(".")).join(VOCAB_FILE));
            load_encoder(existing(&ckpt)?, existing(&vocab)?)?
        }
    };
    let datasets = load_datasets(existing(&data)?, &cfg.tasks)?;
    let results = evaluate_datasets(&datasets, &source, cfg)?;
    for r in &results {
        println!(
            "{}: test {:.1} dev {:.1} (l2 {}, dim {})",
            r.dataset,
            100.0 * r.test_accuracy,
            100.0 * r.dev_accuracy,
            r.l2,
            r.feature_dim
        );
    }
    write_results(&results, &cfg.out_dir.join(RESULTS_FILE))?;
    let report = make_report(&results, &cfg.tasks)?;
    write_report(&report, &cfg.out_dir)?;
    print!("{}", report.to_text());
    Ok(())
}

fn run_report(a: &ReportArgs, cfg: &RunConfig) -> Result<(), PipelineError> {
    let path = a.results.clone().unwrap_or_else(|| cfg.out_dir.join(RESULTS_FILE));
    let results = read_results(existing(&path)?)?;
    let report = make_report(&results, &cfg.tasks)?;
    write_report(&report, &cfg.out_dir)?;
    print!("{}", report.to_text());
    Ok(())
}

fn check(name: &str, err: f64, tol: f64, failures: &mut Vec<String>) {
    let ok = err < tol;
    println!("{} {name}: max relative error {err:.2e}", if ok { "ok  " } else { "FAIL" });
    if !ok {
        failures.push(name.to_string());
    }
}

fn run_selftest() -> Result<(), PipelineError> {
    let mut failures = Vec::new();
    let opts = GradCheckOptions {
        max_coords: Some(400),
        ..GradCheckOptions::default()
    };
    let dims = EncoderDims::new(30, 6, 5);
    let params: EncoderParams<f64> = EncoderParams::random(dims, &mut ChaCha8Rng::seed_from_u64(1));
    let ctx = IndexedContext {
        target: vec![2, 3, 4, 5],
        prev: vec![6, 7, 2],
        next: vec![8, 9],
        nesting_level: 3,
        sent_pos: 4,
        para_pos: 70,
        section_title: vec![10, 11],
        doc_title: vec![12, 13, 14],
    };
    for kind in LossKind::ALL {
        let objective = |flat: &[f64]| {
            let mut p = params.clone();
            p.assign_flat(flat).expect("same layout");
            let mut g = EncoderParams::zeros(p.dims.clone());
            let losses = accumulate_context(&ctx, &p, &[(kind, 1.0)], true, &mut g).expect("valid context");
            (losses.values().flatten().sum::<f64>(), g.flatten())
        };
        let report = grad_check(objective, &params.flatten(), &opts)?;
        check(&format!("{kind} gradient"), report.max_rel_error, 1e-3, &mut failures);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = LabeledFeatures {
        x: (0..12).map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0).collect()).collect(),
        y: (0..12).map(|i| i % 3).collect(),
    };
    for hidden in [None, Some(HiddenLayer { width: 8 })] {
        let probe = Probe::random(6, hidden, 3, &mut rng);
        let objective = |flat: &[f64]| {
            let mut p = probe.clone();
            p.assign_flat(flat).expect("same layout");
            let (l, g) = crate::eval::probe_loss(&p, &data, 1e-3).expect("valid data");
            (l, g.flatten())
        };
        let report = grad_check(objective, &probe.flatten(), &opts)?;
        let name = if hidden.is_some() { "hidden-layer probe gradient" } else { "linear probe gradient" };
        check(name, report.max_rel_error, 1e-3, &mut failures);
    }

    let tmp = tempfile::tempdir()?;
    let mut cfg = RunConfig::defaults(crate::config::Profile::Desk);
    cfg.counts = SplitCounts::new(40, 10, 10);
    cfg.hidden_dim = 8;
    cfg.word_dim = 8;
    cfg.tasks = vec![TaskKind::Sp, TaskKind::Bso];
    let inputs = SynthInputs::fixture(cfg.seed, cfg.counts);
    let (docs, vectors) = fixture_training_inputs(12, cfg.seed, cfg.word_dim);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        synthesize_datasets(&inputs, &cfg, &dir.join("data"))?;
        train_encoder(&docs, &vectors, &cfg, Some(&dir))?;
        let mut bytes = Vec::new();
        for name in ["data/sp.train.tsv", "data/bso.test.tsv", CHECKPOINT_FILE] {
            bytes.push(std::fs::read(dir.join(name))?);
        }
        outputs.push(bytes);
    }
    let same = outputs[0] == outputs[1];
    println!("{} determinism: datasets and checkpoint byte-identical across runs", if same { "ok  " } else { "FAIL" });
    if !same {
        failures.push("determinism".into());
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::Validation(format!("selftest failed: {}", failures.join(", "))))
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on validation errors, 2 on runtime
/// errors.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match (&cli.command, &e) {
                (Command::Selftest, PipelineError::Validation(_)) => 2,
                _ => e.exit_code(),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = load_config(cli.config.as_deref(), &overrides(cli)?)?;
    if let Command::Selftest = cli.command {
        return run_selftest();
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_effective_config(&cfg, &cfg.out_dir)?;
    eprint!("# effective configuration\n{}", cfg.to_toml());
    match &cli.command {
        Command::Synth(a) => run_synth(a, &cfg),
        Command::Train(a) => run_train(a, &cfg),
        Command::Eval(a) => run_eval(a, &cfg),
        Command::Report(a) => run_report(a, &cfg),
        Command::Selftest => unreachable!("handled above"),
    }
}
