//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use discoprobe::cli::run_cli;
use discoprobe::corpus::{build_vocab, read_word_vectors};
use discoprobe::eval::{
    embed_instances, evaluate_dataset, evaluate_probe, make_report, train_probe, EmbeddingCache,
    EmbeddingSource, EvalResult, FeatureConstruction, HiddenLayer, LabeledFeatures, Probe, ProbeSpec,
};
use discoprobe::fixture::{
    attribution_tree, fixture_vectors, pdtb_fixture, synthetic_corpus, timeline_corpus, clock_embeddings,
    FixtureConfig,
};
use discoprobe::nn::{grad_check, EncoderDims, EncoderParams, GradCheckOptions, GradCheckReport, HeadKind, Parameters};
use discoprobe::synth::{
    adapt_pdtb, binarize_rst, deserialize_dataset, extract_rst_instances, split_for_section, synth_sp, Dataset,
    InstanceBody, LabelSpace, Nuclearity, RelationType, RstLabelMode, RstTree, Split, SpWindowMode, SplitCounts,
    TaskInstance, TaskKind,
};
use discoprobe::train::{
    accumulate_context, index_contexts, nl_loss, nsp_loss, sdt_loss, spp_loss, train_epoch, IndexedContext,
    LossConfig, LossKind,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(
        elapsed <= Duration::from_secs(limit_s),
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn desk_vocab_contexts() -> (usize, Vec<IndexedContext>) {
    let docs = synthetic_corpus(&FixtureConfig::small(20, 3));
    let vocab = build_vocab(&docs, 1).unwrap();
    (vocab.len(), index_contexts(&docs, &vocab))
}

fn with_titles(contexts: &[IndexedContext]) -> IndexedContext {
    contexts
        .iter()
        .find(|c| !c.section_title.is_empty() && !c.doc_title.is_empty())
        .expect("fixture has titled sections")
        .clone()
}

/// Checks up to `per_tensor` coordinates of every tensor (embedding rows
/// restricted to the context's tokens).
fn check_encoder_loss(kind: LossKind, ctx: &IndexedContext, params: &EncoderParams<f64>, seed: u64) -> GradCheckReport {
    let theta = params.flatten();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::new();
    let mut offset = 0;
    let word_dim = params.dims.word_dim;
    let tokens: BTreeSet<usize> = [&ctx.target, &ctx.prev, &ctx.next].into_iter().flatten().copied().collect();
    for (t, tensor) in params.tensors().iter().enumerate() {
        let n = tensor.len();
        if t == 0 {
            for &tok in &tokens {
                coords.push(offset + tok * word_dim + rng.random_range(0..word_dim));
            }
        } else {
            let k = n.min(12);
            coords.extend(rand::seq::index::sample(&mut rng, n, k).into_iter().map(|i| offset + i));
        }
        offset += n;
    }
    let sub: Vec<f64> = coords.iter().map(|&i| theta[i]).collect();
    let opts = GradCheckOptions::default();
    grad_check(
        |s| {
            let mut full = theta.clone();
            for (k, &i) in coords.iter().enumerate() {
                full[i] = s[k];
            }
            let mut p = params.clone();
            p.assign_flat(&full).unwrap();
            let mut g = EncoderParams::zeros(p.dims.clone());
            let losses = accumulate_context(ctx, &p, &[(kind, 1.0)], true, &mut g).unwrap();
            let gflat = g.flatten();
            (losses.values().flatten().sum(), coords.iter().map(|&i| gflat[i]).collect())
        },
        &sub,
        &opts,
    )
    .unwrap()
}

fn c1_gradients() -> Outcome {
    let t = Instant::now();
    let (v, contexts) = desk_vocab_contexts();
    let ctx = with_titles(&contexts);
    let params: EncoderParams<f64> = EncoderParams::random(EncoderDims::new(v, 32, 32), &mut ChaCha8Rng::seed_from_u64(11));
    let mut parts = Vec::new();
    for (i, kind) in LossKind::ALL.into_iter().enumerate() {
        let r = check_encoder_loss(kind, &ctx, &params, i as u64);
        ensure(r.max_rel_error < 1e-3, format!("{kind}: max relative error {:.2e}", r.max_rel_error))?;
        parts.push(format!("{kind} {:.1e}", r.max_rel_error));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let data = LabeledFeatures {
        x: (0..32).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
        y: (0..32).map(|i| i % 5).collect(),
    };
    for (name, hidden) in [("linear probe", None), ("hidden probe", Some(HiddenLayer::scaled(16)))] {
        let probe = Probe::random(64, hidden, 5, &mut rng);
        let r = grad_check(
            |flat| {
                let mut p = probe.clone();
                p.assign_flat(flat).unwrap();
                let (l, g) = discoprobe::eval::probe_loss(&p, &data, 1e-3).unwrap();
                (l, g.flatten())
            },
            &probe.flatten(),
            &GradCheckOptions {
                max_coords: Some(600),
                ..GradCheckOptions::default()
            },
        )
        .unwrap();
        ensure(r.max_rel_error < 1e-3, format!("{name}: max relative error {:.2e}", r.max_rel_error))?;
        parts.push(format!("{name} {:.1e}", r.max_rel_error));
    }
    within(t.elapsed(), 60)?;
    Ok(parts.join(", "))
}

fn c2_initialization() -> Outcome {
    let (v, contexts) = desk_vocab_contexts();
    let ctx = with_titles(&contexts);
    let mut params: EncoderParams<f32> = EncoderParams::random(EncoderDims::new(v, 32, 32), &mut ChaCha8Rng::seed_from_u64(5));
    for h in HeadKind::ALL {
        params.head_mut(h).zero_output_layer();
    }
    let nl = nl_loss(&ctx, &params).unwrap().loss;
    let spp = spp_loss(&ctx, &params).unwrap().loss;
    let nsp = nsp_loss(&ctx, &params).unwrap().loss;
    let sdt = sdt_loss(&ctx, &params).unwrap().loss;
    let ln_v = (v as f64).ln();
    ensure((nl - 7f64.ln()).abs() <= 1e-5, format!("NL {nl} vs ln 7"))?;
    ensure((spp - 32f64.ln() - 64f64.ln()).abs() <= 1e-5, format!("SPP {spp} vs ln 32 + ln 64"))?;
    ensure((nsp - 2.0 * ln_v).abs() <= 1e-4, format!("NSP {nsp} vs 2 ln {v}"))?;
    ensure((sdt - 2.0 * ln_v).abs() <= 1e-4, format!("SDT {sdt} vs 2 ln {v}"))?;
    Ok(format!("NL {nl:.6}, SPP {spp:.6}, NSP {nsp:.5}, SDT {sdt:.5} (V={v})"))
}

fn c3_report() -> Outcome {
    let rows = [
        ("Baseline (NSP)", [47.3, 63.8, 61.0, 77.8, 36.5, 39.1, 56.7], "54.6"),
        ("BERT-Large", [53.8, 69.3, 59.6, 80.4, 44.3, 43.6, 59.1], "58.6"),
    ];
    let mut parts = Vec::new();
    for (name, values, expected) in rows {
        let results: Vec<EvalResult> = TaskKind::ALL
            .into_iter()
            .zip(values)
            .map(|(task, v)| EvalResult {
                dataset: task.name().into(),
                task,
                dev_accuracy: 0.0,
                test_accuracy: v / 100.0,
                l2: 0.0,
                seed: 0,
                feature_dim: 0,
            })
            .collect();
        let report = make_report(&results, &TaskKind::ALL).map_err(|e| e.to_string())?;
        let avg = report.to_csv().lines().nth(1).unwrap().rsplit(',').next().unwrap().to_string();
        ensure(avg == expected, format!("{name}: avg {avg}, expected {expected}"))?;
        parts.push(format!("{name} {avg}"));
    }
    Ok(parts.join(", "))
}

fn chi_square_p(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}

fn c4_synthesis() -> Outcome {
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let code = run_cli([
        "disco", "--out", out, "--seed", "13", "synth", "--fixture", "--task", "sp,bso,dc,ssp", "--counts",
        "10000,4000,4000",
    ]);
    ensure(code == 0, format!("synth exited with {code}"))?;
    let data = tmp.path().join("data");
    let mut parts = Vec::new();
    for (name, task) in [
        ("sp", TaskKind::Sp),
        ("bso", TaskKind::Bso),
        ("dc", TaskKind::Dc),
        ("dc_threads", TaskKind::Dc),
        ("ssp", TaskKind::Ssp),
    ] {
        let ds = deserialize_dataset(&data, name, task).map_err(|e| e.to_string())?;
        let sizes = [ds.splits.train.len(), ds.splits.dev.len(), ds.splits.test.len()];
        ensure(sizes == [10000, 4000, 4000], format!("{name}: sizes {sizes:?}"))?;
        let docs: Vec<BTreeSet<&str>> = Split::ALL
            .iter()
            .map(|&s| ds.splits.get(s).iter().map(|i| i.source_doc_id.as_str()).collect())
            .collect();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            ensure(docs[a].is_disjoint(&docs[b]), format!("{name}: splits {a} and {b} share documents"))?;
        }
        if task != TaskKind::Sp {
            for s in Split::ALL {
                let ones = ds.splits.get(s).iter().filter(|i| i.label == 1).count();
                let zeros = ds.splits.get(s).len() - ones;
                ensure(ones.abs_diff(zeros) <= 1, format!("{name} {}: {ones} vs {zeros}", s.name()))?;
            }
        }
        if task == TaskKind::Sp {
            let counts = ds.splits.label_counts(Split::Train, 5);
            let p = chi_square_p(&counts);
            ensure(p > 0.01, format!("SP labels {counts:?}, p = {p:.4}"))?;
            parts.push(format!("SP labels p={p:.3}"));
        }
        if name == "dc" {
            let mut slots = [0usize; 4];
            for inst in &ds.splits.train {
                if let InstanceBody::Dc {
                    replaced_slot: Some(s), ..
                } = inst.body
                {
                    ensure((2..=5).contains(&s), format!("replaced slot {s}"))?;
                    slots[s - 2] += 1;
                }
            }
            let p = chi_square_p(&slots);
            ensure(p > 0.01, format!("DC slots {slots:?}, p = {p:.4}"))?;
            parts.push(format!("DC slots p={p:.3}"));
        }
    }
    within(t.elapsed(), 120)?;
    Ok(format!("5 datasets at 10000/4000/4000, {}", parts.join(", ")))
}

fn c5_pdtb() -> Outcome {
    let records = pdtb_fixture();
    ensure(records.len() == 60, format!("{} records", records.len()))?;
    let sections: BTreeSet<i64> = records.iter().map(|r| r.section).collect();
    ensure(
        sections.first() == Some(&1) && sections.last() == Some(&24),
        "fixture spans sections 1-24",
    )?;
    let adapted = adapt_pdtb(&records).map_err(|e| e.to_string())?;
    let expect_split = |s: i64| match s {
        2..=14 => Some(Split::Train),
        15..=18 => Some(Split::Dev),
        19..=23 => Some(Split::Test),
        _ => None,
    };
    for s in 0..=24 {
        ensure(split_for_section(s).unwrap() == expect_split(s), format!("section {s} routed wrongly"))?;
    }
    let dropped = records.iter().filter(|r| expect_split(r.section).is_none()).count();
    ensure(adapted.dropped_out_of_range == dropped, format!("dropped {}", adapted.dropped_out_of_range))?;

    // per type and label, the number of train records decides survival
    let mut train_counts: BTreeMap<(bool, &str), usize> = BTreeMap::new();
    for r in &records {
        if expect_split(r.section) == Some(Split::Train) {
            *train_counts.entry((r.relation_type == RelationType::Explicit, &r.label)).or_default() += 1;
        }
    }
    for (ds, explicit) in [(&adapted.explicit, true), (&adapted.implicit, false)] {
        for split in Split::ALL {
            let expected = records
                .iter()
                .filter(|r| (r.relation_type == RelationType::Explicit) == explicit)
                .filter(|r| expect_split(r.section) == Some(split))
                .filter(|r| train_counts.get(&(explicit, r.label.as_str())).copied().unwrap_or(0) >= 10)
                .count();
            let got = ds.splits.get(split).len();
            ensure(got == expected, format!("{} {}: {got} rows, expected {expected}", ds.name, split.name()))?;
        }
    }
    ensure(
        train_counts[&(true, "Comparison.Concession")] == 9,
        "fixture has a 9-instance label",
    )?;
    ensure(
        adapted.removed_explicit == vec!["Comparison.Concession".to_string()]
            && adapted.explicit.labels.index_of("Comparison.Concession").is_none(),
        format!("removed {:?}", adapted.removed_explicit),
    )?;
    let first = adapted
        .explicit
        .splits
        .train
        .iter()
        .find(|i| matches!(&i.body, InstanceBody::PairRel { arg1, .. } if arg1.starts_with("In any case")))
        .ok_or("example relation missing")?;
    let InstanceBody::PairRel { arg2, .. } = &first.body else { unreachable!() };
    ensure(
        arg2 == "it remains to be seen whether their ads will be any more effective.",
        format!("connective not removed: {arg2:?}"),
    )?;
    ensure(
        adapted.explicit.labels.names[first.label] == "Comparison.Contrast",
        "example label",
    )?;
    Ok(format!(
        "{dropped} out-of-range dropped, Concession (9 train) removed, \"But\" stripped from arg2"
    ))
}

fn leaves_in_order(t: &RstTree) -> Vec<usize> {
    t.leaves()
}

fn c6_rst() -> Outcome {
    let four = RstTree::node(
        "Joint",
        Nuclearity::NN,
        (1..=4).map(RstTree::leaf).collect(),
    );
    let bin = binarize_rst(&four).map_err(|e| e.to_string())?;
    ensure(bin.is_binary(), "not binary")?;
    ensure(leaves_in_order(&bin) == vec![1, 2, 3, 4], "leaf order changed")?;
    // right-branching: every left child is a leaf
    let mut node = &bin;
    let mut depth = 0;
    while let RstTree::Node { children, .. } = node {
        ensure(matches!(children[0], RstTree::Leaf { .. }), "left child is not a leaf")?;
        node = &children[1];
        depth += 1;
    }
    ensure(depth == 3, format!("chain depth {depth}"))?;

    let nodes = extract_rst_instances(&attribution_tree(), 3, RstLabelMode::NuclearityRelation).map_err(|e| e.to_string())?;
    let root = &nodes[0];
    ensure(root.left == vec![1, 2] && root.right == vec![3], format!("spans {:?} {:?}", root.left, root.right))?;
    ensure(root.label == "NN-Attribution", format!("label {}", root.label))?;

    let x = [vec![1.0, -2.0, 0.5], vec![3.0, 4.0, -1.5], vec![0.25, 0.0, 9.0]];
    let mut cache = EmbeddingCache::new(3);
    for (slot, v) in x.iter().enumerate() {
        cache.insert("attr#0", slot, v.clone()).unwrap();
    }
    let inst = TaskInstance {
        instance_id: "attr#0".into(),
        source_doc_id: "attr".into(),
        label: 0,
        body: InstanceBody::RstNode {
            left: vec!["e1".into(), "e2".into()],
            right: vec!["e3".into()],
        },
    };
    let e = embed_instances(&[inst], &EmbeddingSource::Cache(cache)).map_err(|e| e.to_string())?;
    let mean: Vec<f64> = x[0].iter().zip(&x[1]).map(|(a, b)| (a + b) / 2.0).collect();
    ensure(e[0].vectors == vec![mean, x[2].clone()], format!("{:?}", e[0].vectors))?;
    Ok("4-child node -> right-branching chain; NN-Attribution with x_left=(x1+x2)/2, x_right=x3".into())
}

fn c7_training() -> Outcome {
    let t = Instant::now();
    let fc = FixtureConfig::training(200, 13);
    let docs = synthetic_corpus(&fc);
    let vocab = build_vocab(&docs, 1).unwrap();
    let contexts = index_contexts(&docs, &vocab);
    let table = read_word_vectors(fixture_vectors(&fc, 32).as_bytes(), &vocab, 32, 13).unwrap().table;
    let mut parts = vec![format!("V={} contexts={}", vocab.len(), contexts.len())];
    for (label, cfg) in [("nsp-only", LossConfig::nsp_only(13)), ("all", LossConfig::all(13))] {
        let mut params = EncoderParams::random(EncoderDims::new(vocab.len(), 32, 32), &mut ChaCha8Rng::seed_from_u64(13));
        params.embedding = table.clone();
        let (_, log) = train_epoch(&contexts, &cfg, params, None).map_err(|e| e.to_string())?;
        for kind in &cfg.enabled {
            let (first, last) = log.first_last_means(kind.name(), 100).ok_or("short log")?;
            let ratio = last / first;
            ensure(ratio <= 0.8, format!("{label} {kind}: last/first = {ratio:.3}"))?;
            parts.push(format!("{label} {kind} {ratio:.2}"));
        }
    }
    within(t.elapsed(), 300)?;
    Ok(parts.join(", "))
}

fn blobs(n: usize, dim: usize, classes: usize, sep: f64, rng: &mut ChaCha8Rng) -> LabeledFeatures {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| sep * normal.sample(rng)).collect())
        .collect();
    let y: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let x = y
        .iter()
        .map(|&k| centres[k].iter().map(|c| c + normal.sample(rng)).collect())
        .collect();
    LabeledFeatures { x, y }
}

fn split3(mut all: LabeledFeatures, n_train: usize, n_dev: usize) -> [LabeledFeatures; 3] {
    let test = LabeledFeatures {
        x: all.x.split_off(n_train + n_dev),
        y: all.y.split_off(n_train + n_dev),
    };
    let dev = LabeledFeatures {
        x: all.x.split_off(n_train),
        y: all.y.split_off(n_train),
    };
    [all, dev, test]
}

fn shuffle_rows(d: &mut LabeledFeatures, rng: &mut ChaCha8Rng) {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.shuffle(rng);
    d.x = idx.iter().map(|&i| d.x[i].clone()).collect();
    d.y = idx.iter().map(|&i| d.y[i]).collect();
}

fn c8_probes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sep = blobs(1400, 16, 2, 4.0, &mut rng);
    shuffle_rows(&mut sep, &mut rng);
    let [tr, dv, te] = split3(sep, 800, 200);
    let spec = ProbeSpec::linear("blobs", FeatureConstruction::Single, 2, 1);
    let p = train_probe(&tr, &dv, &spec).map_err(|e| e.to_string())?;
    let separable = evaluate_probe(&p.probe, &te).map_err(|e| e.to_string())?;
    ensure(separable >= 0.99, format!("separable test accuracy {separable:.3}"))?;

    let k = 4;
    let mut noisy = blobs(3000, 16, k, 2.0, &mut rng);
    shuffle_rows(&mut noisy, &mut rng);
    noisy.y.shuffle(&mut rng);
    let [tr, dv, te] = split3(noisy, 1500, 500);
    let spec = ProbeSpec::linear("shuffled", FeatureConstruction::Single, k, 2);
    let p = train_probe(&tr, &dv, &spec).map_err(|e| e.to_string())?;
    let shuffled = evaluate_probe(&p.probe, &te).map_err(|e| e.to_string())?;
    let kf = k as f64;
    let band = 3.0 * (kf - 1.0).sqrt() / (kf * (te.len() as f64).sqrt());
    ensure(
        (shuffled - 1.0 / kf).abs() <= band,
        format!("shuffled accuracy {shuffled:.3} outside 0.25 ± {band:.3}"),
    )?;

    // sign-parity labels on heavy-tailed features: no half-plane gets much
    // above 0.57 on this distribution. Every point comes with its three
    // reflections, in the same split.
    let cauchy = Cauchy::new(0.0, 1.0).unwrap();
    let mut xor = LabeledFeatures::default();
    for _ in 0..2000 {
        let p = [cauchy.sample(&mut rng), cauchy.sample(&mut rng)];
        let mut group = LabeledFeatures::default();
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            let q = vec![sx * p[0], sy * p[1]];
            group.y.push(usize::from((q[0] > 0.0) != (q[1] > 0.0)));
            group.x.push(q);
        }
        shuffle_rows(&mut group, &mut rng);
        xor.x.extend(group.x);
        xor.y.extend(group.y);
    }
    let [mut tr, dv, te] = split3(xor, 4800, 1600);
    shuffle_rows(&mut tr, &mut rng);
    let linear = ProbeSpec::linear("xor", FeatureConstruction::Single, 2, 3);
    let lin = evaluate_probe(&train_probe(&tr, &dv, &linear).map_err(|e| e.to_string())?.probe, &te)
        .map_err(|e| e.to_string())?;
    let mut hidden = linear.clone();
    hidden.hidden = Some(HiddenLayer { width: 32 });
    hidden.lr = 1e-2;
    hidden.max_epochs = 300;
    hidden.patience = 20;
    let hid = evaluate_probe(&train_probe(&tr, &dv, &hidden).map_err(|e| e.to_string())?.probe, &te)
        .map_err(|e| e.to_string())?;
    ensure(lin <= 0.6, format!("linear XOR accuracy {lin:.3}"))?;
    ensure(hid >= 0.9, format!("hidden-layer XOR accuracy {hid:.3}"))?;
    Ok(format!(
        "separable {separable:.3}, shuffled {shuffled:.3} (chance 0.25 ± {band:.3}), XOR linear {lin:.3} vs hidden {hid:.3}"
    ))
}

fn c9_context() -> Outcome {
    let docs = timeline_corpus(4200, 9);
    let counts = SplitCounts::new(2000, 500, 1500);
    let splits = synth_sp(&docs, 9, counts, SpWindowMode::FirstParagraph).map_err(|e| e.to_string())?;
    let ds = Dataset {
        name: "sp_timeline".into(),
        task: TaskKind::Sp,
        labels: LabelSpace::numbered("sp", 5),
        splits,
    };
    let all: Vec<TaskInstance> = Split::ALL.iter().flat_map(|&s| ds.splits.get(s).to_vec()).collect();
    let source = EmbeddingSource::Cache(clock_embeddings(&all, 8, 9));
    let mut acc = BTreeMap::new();
    for c in [FeatureConstruction::Sp5, FeatureConstruction::Sp1] {
        let spec = ProbeSpec::linear("sp_timeline", c, 5, 9);
        let r = evaluate_dataset(&ds, &source, &spec).map_err(|e| e.to_string())?;
        acc.insert(c.name(), 100.0 * r.test_accuracy);
    }
    let (sp5, sp1) = (acc["sp5"], acc["sp1"]);
    ensure(sp5 - sp1 >= 10.0, format!("sp5 {sp5:.1} vs sp1 {sp1:.1}"))?;
    ensure(sp1 > 20.0, format!("sp1 {sp1:.1} not above chance"))?;
    Ok(format!("random 20.0, sp1 {sp1:.1}, sp5 {sp5:.1}"))
}

fn pipeline_run(dir: &Path, config: &Path) -> Result<(), String> {
    let out = dir.to_str().unwrap();
    let cfg = config.to_str().unwrap();
    let steps: [&[&str]; 4] = [
        &["synth", "--fixture"],
        &["train", "--fixture", "12"],
        &["eval"],
        &["report"],
    ];
    for step in steps {
        let mut argv = vec!["disco", "--config", cfg, "--out", out];
        argv.extend_from_slice(step);
        let code = run_cli(argv.clone());
        ensure(code == 0, format!("{argv:?} exited with {code}"))?;
    }
    Ok(())
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "seed = 21\nhidden_dim = 8\nword_dim = 8\ncounts = [60, 20, 20]\nlosses = [\"nsp\", \"nl\", \"spp\", \"sdt\"]\n",
    )
    .unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline_run(&a, &config)?;
    pipeline_run(&b, &config)?;
    let (fa, fb) = (files_under(&a), files_under(&b));
    ensure(fa.keys().eq(fb.keys()), "different file sets")?;
    for required in ["encoder.ckpt", "report.csv", "report.txt", "results.jsonl", "data/sp.train.tsv"] {
        ensure(fa.contains_key(required), format!("{required} missing"))?;
    }
    let differing: Vec<&String> = fa.keys().filter(|k| k.as_str() != "effective_config.toml" && fa[*k] != fb[*k]).collect();
    ensure(differing.is_empty(), format!("differ: {differing:?}"))?;
    Ok(format!("{} files byte-identical across two runs", fa.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient correctness", c1_gradients),
        ("initialization exactness", c2_initialization),
        ("report arithmetic", c3_report),
        ("synthesis contracts", c4_synthesis),
        ("PDTB adapter", c5_pdtb),
        ("RST adapter", c6_rst),
        ("training sanity", c7_training),
        ("probe sanity", c8_probes),
        ("context ablation", c9_context),
        ("end-to-end determinism", c10_determinism),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if let Some(flt) = &filter {
            if *flt != id && !name.contains(flt.as_str()) {
                continue;
            }
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  #{id:<2} {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  #{id:<2} {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
