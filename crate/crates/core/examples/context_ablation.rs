//! Sentence position probing with and without context. Each sentence's
//! embedding carries a noisy clock reading; the position of the moved
//! sentence is only recoverable by comparing it with its neighbours.

use discoprobe::eval::{evaluate_dataset, EmbeddingSource, FeatureConstruction, ProbeSpec};
use discoprobe::fixture::{clock_embeddings, timeline_corpus};
use discoprobe::synth::{synth_sp, Dataset, LabelSpace, Split, SpWindowMode, SplitCounts, TaskInstance, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = timeline_corpus(2100, 4);
    let splits = synth_sp(&docs, 4, SplitCounts::new(1000, 250, 750), SpWindowMode::FirstParagraph)?;
    let ds = Dataset {
        name: "sp_timeline".into(),
        task: TaskKind::Sp,
        labels: LabelSpace::numbered("sp", 5),
        splits,
    };
    let all: Vec<TaskInstance> = Split::ALL.iter().flat_map(|&s| ds.splits.get(s).to_vec()).collect();
    let source = EmbeddingSource::Cache(clock_embeddings(&all, 8, 4));

    println!("chance 20.0");
    for c in [FeatureConstruction::Sp1, FeatureConstruction::Sp5] {
        let r = evaluate_dataset(&ds, &source, &ProbeSpec::linear("sp_timeline", c, 5, 4))?;
        println!("{c:<4} {:.1}", 100.0 * r.test_accuracy);
    }
    Ok(())
}
