//! Compares analytic gradients of each training loss against central finite
//! differences in double precision.

use discoprobe::corpus::build_vocab;
use discoprobe::fixture::{synthetic_corpus, FixtureConfig};
use discoprobe::nn::{grad_check, EncoderDims, EncoderParams, GradCheckOptions, Parameters};
use discoprobe::train::{accumulate_context, index_contexts, LossKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = synthetic_corpus(&FixtureConfig::tiny(4, 2));
    let vocab = build_vocab(&docs, 1)?;
    let contexts = index_contexts(&docs, &vocab);
    let ctx = contexts.iter().find(|c| !c.section_title.is_empty()).unwrap_or(&contexts[0]);
    let params: EncoderParams<f64> =
        EncoderParams::random(EncoderDims::new(vocab.len(), 6, 5), &mut ChaCha8Rng::seed_from_u64(3));
    let opts = GradCheckOptions {
        max_coords: Some(300),
        ..GradCheckOptions::default()
    };

    for kind in LossKind::ALL {
        let report = grad_check(
            |flat| {
                let mut p = params.clone();
                p.assign_flat(flat).expect("same layout");
                let mut g = EncoderParams::zeros(p.dims.clone());
                let losses = accumulate_context(ctx, &p, &[(kind, 1.0)], true, &mut g).expect("valid context");
                (losses.values().flatten().sum(), g.flatten())
            },
            &params.flatten(),
            &opts,
        )?;
        println!(
            "{kind:<4} max relative error {:.2e} over {} coordinates ({} skipped near kinks)",
            report.max_rel_error, report.checked, report.skipped_kinks
        );
    }
    Ok(())
}
