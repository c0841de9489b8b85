//! Builds the four corpus-derived probing datasets (sentence position,
//! binary sentence ordering, discourse coherence, sentence section prediction)
//! from a synthetic corpus and prints a few rows of each.
//!
//!     cargo run --example synthesize_datasets

use discoprobe::config::{Profile, RunConfig};
use discoprobe::pipeline::{synthesize_task, SynthInputs};
use discoprobe::synth::{format_row, Split, SplitCounts, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::defaults(Profile::Desk);
    cfg.counts = SplitCounts::new(200, 50, 50);
    let inputs = SynthInputs::fixture(cfg.seed, cfg.counts);

    for task in [TaskKind::Sp, TaskKind::Bso, TaskKind::Dc, TaskKind::Ssp] {
        for ds in synthesize_task(task, &inputs, &cfg)? {
            ds.splits.check_disjoint()?;
            println!(
                "{:<11} train/dev/test = {}/{}/{}  labels = {}",
                ds.name,
                ds.splits.train.len(),
                ds.splits.dev.len(),
                ds.splits.test.len(),
                ds.labels.len()
            );
            for inst in ds.splits.get(Split::Train).iter().take(2) {
                let row = format_row(inst);
                let short: String = row.chars().take(110).collect();
                println!("    {short}...");
            }
        }
    }
    Ok(())
}
