//! Trains the BiGRU sentence encoder for one epoch, once with next-sentence
//! prediction alone and once with all four discourse losses, and compares the
//! per-head loss curves.
//!
//!     cargo run --release --example train_encoder [n_docs]

use discoprobe::config::{Profile, RunConfig};
use discoprobe::pipeline::{fixture_training_inputs, train_encoder};
use discoprobe::train::LossKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_docs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(60);
    let mut cfg = RunConfig::defaults(Profile::Desk);
    let (docs, vectors) = fixture_training_inputs(n_docs, cfg.seed, cfg.word_dim);

    for losses in [vec![LossKind::Nsp], LossKind::ALL.to_vec()] {
        cfg.losses = losses;
        let t = std::time::Instant::now();
        let trained = train_encoder(&docs, &vectors, &cfg, None)?;
        println!(
            "losses {:?}: {} steps, vocab {}, {:.1}s",
            cfg.losses.iter().map(|k| k.name()).collect::<Vec<_>>(),
            trained.log.steps,
            trained.vocab.len(),
            t.elapsed().as_secs_f64()
        );
        for head in ["nsp", "nl", "spp", "sdt"] {
            if let Some((first, last)) = trained.log.first_last_means(head, 20) {
                println!("  {head:<4} first {first:8.3}  last {last:8.3}  ratio {:.2}", last / first);
            }
        }
    }
    Ok(())
}
