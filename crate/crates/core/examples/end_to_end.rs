//! Synthesizes every task, trains a small encoder, probes it and writes the
//! report, all into one output directory.
//!
//!     cargo run --release --example end_to_end [out_dir]

use std::path::PathBuf;

use discoprobe::config::{Profile, RunConfig};
use discoprobe::eval::{make_report, write_report, EmbeddingSource};
use discoprobe::pipeline::{
    fixture_training_inputs, synthesize_datasets, train_encoder, write_effective_config, write_results, SynthInputs,
    RESULTS_FILE,
};
use discoprobe::synth::{SplitCounts, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("disco-run"));
    std::fs::create_dir_all(out.join("data"))?;
    let mut cfg = RunConfig::defaults(Profile::Desk);
    cfg.hidden_dim = 16;
    cfg.word_dim = 16;
    cfg.counts = SplitCounts::new(120, 40, 40);
    write_effective_config(&cfg, &out)?;

    let datasets = synthesize_datasets(&SynthInputs::fixture(cfg.seed, cfg.counts), &cfg, &out.join("data"))?;
    println!("synthesized {} datasets", datasets.len());

    let (docs, vectors) = fixture_training_inputs(20, cfg.seed, cfg.word_dim);
    let trained = train_encoder(&docs, &vectors, &cfg, Some(&out))?;
    println!("trained {} steps", trained.log.steps);

    let source = EmbeddingSource::Encoder {
        params: trained.params,
        vocab: trained.vocab,
    };
    let results = discoprobe::pipeline::evaluate_datasets(&datasets, &source, &cfg)?;
    write_results(&results, &out.join(RESULTS_FILE))?;
    let report = make_report(&results, &TaskKind::ALL)?;
    write_report(&report, &out)?;
    print!("{}", report.to_text());
    println!("outputs in {}", out.display());
    Ok(())
}
