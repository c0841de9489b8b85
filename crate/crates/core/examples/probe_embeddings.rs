//! Evaluates precomputed sentence embeddings: writes an embedding cache for
//! two synthesized datasets, reads it back, trains one probe per dataset and
//! prints the report table. The cached vectors encode a noisy timestamp of
//! each sentence, so ordering is recoverable from them.

use discoprobe::config::{Profile, RunConfig};
use discoprobe::eval::{make_report, EmbeddingCache, EmbeddingSource};
use discoprobe::fixture::{clock_embeddings, timeline_corpus};
use discoprobe::pipeline::{evaluate_datasets, synthesize_task, SynthInputs};
use discoprobe::synth::{Split, SplitCounts, TaskInstance, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::defaults(Profile::Desk);
    cfg.counts = SplitCounts::new(300, 100, 100);
    let inputs = SynthInputs {
        docs: Some(timeline_corpus(1200, cfg.seed)),
        ..SynthInputs::default()
    };
    let mut datasets = synthesize_task(TaskKind::Sp, &inputs, &cfg)?;
    datasets.extend(synthesize_task(TaskKind::Bso, &inputs, &cfg)?);

    let all: Vec<TaskInstance> = datasets
        .iter()
        .flat_map(|ds| Split::ALL.iter().flat_map(|&s| ds.splits.get(s).to_vec()))
        .collect();
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("embeddings.tsv");
    clock_embeddings(&all, 16, cfg.seed).write(&path)?;
    let cache = EmbeddingCache::read(&path)?;
    println!("cache: {} instances, dim {}", cache.len(), cache.dim());

    let results = evaluate_datasets(&datasets, &EmbeddingSource::Cache(cache), &cfg)?;
    for r in &results {
        println!(
            "{:<4} dev {:.3} test {:.3} (l2 {}, {} features)",
            r.dataset, r.dev_accuracy, r.test_accuracy, r.l2, r.feature_dim
        );
    }
    print!("\n{}", make_report(&results, &[TaskKind::Sp, TaskKind::Bso])?.to_text());
    Ok(())
}
