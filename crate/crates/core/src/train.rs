//! Training objectives (NSP, NL, SPP, SDT) and the one-epoch multitask loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{TrainingContext, Vocab};
use crate::io::write_atomic;
use crate::nn::{
    bow_xent, encode_backward, encode_cached, save_checkpoint, softmax_xent, AdamConfig, AdamState, EncoderParams,
    HeadKind, NnError, Parameters, Real,
};
use crate::synth::derive_rng;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training contexts")]
    EmptyCorpus,
    #[error("non-finite loss at step {step} (head {head})")]
    NonFiniteLoss { step: usize, head: String },
    #[error("nesting level {0} outside 1..=7")]
    LevelOutOfRange(u8),
    #[error("both section and document titles are empty")]
    BothTitlesEmpty,
    #[error("invalid loss configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TrainError {
    fn from(e: std::io::Error) -> Self {
        TrainError::Io(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Nsp,
    Nl,
    Spp,
    Sdt,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::Nsp, LossKind::Nl, LossKind::Spp, LossKind::Sdt];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Nsp => "nsp",
            LossKind::Nl => "nl",
            LossKind::Spp => "spp",
            LossKind::Sdt => "sdt",
        }
    }

    pub fn heads(self) -> &'static [HeadKind] {
        match self {
            LossKind::Nsp => &[HeadKind::NspPrev, HeadKind::NspNext],
            LossKind::Nl => &[HeadKind::NestingLevel],
            LossKind::Spp => &[HeadKind::SentencePosition, HeadKind::ParagraphPosition],
            LossKind::Sdt => &[HeadKind::SectionTitle, HeadKind::DocumentTitle],
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown loss {s:?} (expected nsp, nl, spp or sdt)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossConfig {
    pub enabled: BTreeSet<LossKind>,
    pub weights: BTreeMap<LossKind, f64>,
    /// Class counts for sentence and paragraph positions; larger positions
    /// fall into the last class.
    pub spp_caps: (usize, usize),
    pub batch_size: usize,
    pub seed: u64,
    /// Divide bag-of-words losses by the bag size.
    pub normalize_bow: bool,
    pub adam: AdamConfig,
}

impl LossConfig {
    pub fn new(enabled: &[LossKind], seed: u64) -> Self {
        let mut set: BTreeSet<LossKind> = enabled.iter().copied().collect();
        set.insert(LossKind::Nsp);
        LossConfig {
            enabled: set,
            weights: LossKind::ALL.iter().map(|&k| (k, 1.0)).collect(),
            spp_caps: (32, 64),
            batch_size: 64,
            seed,
            normalize_bow: true,
            adam: AdamConfig::default(),
        }
    }

    pub fn nsp_only(seed: u64) -> Self {
        Self::new(&[LossKind::Nsp], seed)
    }

    pub fn all(seed: u64) -> Self {
        Self::new(&LossKind::ALL, seed)
    }

    pub fn weight(&self, kind: LossKind) -> f64 {
        self.weights.get(&kind).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if !self.enabled.contains(&LossKind::Nsp) {
            return Err(TrainError::InvalidConfig("the NSP loss is always enabled".into()));
        }
        if let Some((k, w)) = self.weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(TrainError::InvalidConfig(format!("weight of {k} must be finite and >= 0, got {w}")));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch size must be positive".into()));
        }
        if self.spp_caps.0 == 0 || self.spp_caps.1 == 0 {
            return Err(TrainError::InvalidConfig("position caps must be positive".into()));
        }
        Ok(())
    }
}

/// A training context mapped to vocabulary indices and class targets.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedContext {
    pub target: Vec<usize>,
    pub prev: Vec<usize>,
    pub next: Vec<usize>,
    pub nesting_level: u8,
    pub sent_pos: usize,
    pub para_pos: usize,
    pub section_title: Vec<usize>,
    pub doc_title: Vec<usize>,
}

impl IndexedContext {
    pub fn new(ctx: &TrainingContext, vocab: &Vocab) -> Self {
        IndexedContext {
            target: vocab.encode(&ctx.target.tokens),
            prev: vocab.encode(&ctx.prev.tokens),
            next: vocab.encode(&ctx.next.tokens),
            nesting_level: ctx.nesting_level,
            sent_pos: ctx.sent_pos,
            para_pos: ctx.para_pos,
            section_title: vocab.encode(&ctx.section_title),
            doc_title: vocab.encode(&ctx.doc_title),
        }
    }
}

/// Training contexts of every document, in corpus order.
pub fn index_contexts(docs: &[crate::corpus::Document], vocab: &Vocab) -> Vec<IndexedContext> {
    docs.iter()
        .flat_map(crate::corpus::context_windows)
        .map(|c| IndexedContext::new(&c, vocab))
        .collect()
}

/// Clamps a position into `0..cap`.
pub fn position_bucket(pos: usize, cap: usize) -> usize {
    pos.min(cap.saturating_sub(1))
}

pub fn level_class(level: u8) -> Result<usize, TrainError> {
    if (1..=7).contains(&level) {
        Ok(level as usize - 1)
    } else {
        Err(TrainError::LevelOutOfRange(level))
    }
}

enum Target<'a> {
    Bag(&'a [usize]),
    Class(usize),
}

/// Per-loss values for one context; `None` when the term was skipped.
pub type ContextLosses = BTreeMap<LossKind, Option<f64>>;

/// Scores one context under the requested losses with the given weights,
/// accumulating `weight · ∂loss/∂θ` into `grads`. Returns unweighted losses.
pub fn accumulate_context<F: Real>(
    ctx: &IndexedContext,
    params: &EncoderParams<F>,
    losses: &[(LossKind, f64)],
    normalize_bow: bool,
    grads: &mut EncoderParams<F>,
) -> Result<ContextLosses, TrainError> {
    let cache = encode_cached(&ctx.target, params)?;
    let mut d_emb = vec![F::zero(); cache.output.len()];
    let mut out = ContextLosses::new();
    let dims = &params.dims;
    for &(kind, weight) in losses {
        let terms: Vec<(HeadKind, Target)> = match kind {
            LossKind::Nsp => vec![
                (HeadKind::NspPrev, Target::Bag(&ctx.prev)),
                (HeadKind::NspNext, Target::Bag(&ctx.next)),
            ],
            LossKind::Nl => vec![(HeadKind::NestingLevel, Target::Class(level_class(ctx.nesting_level)?))],
            LossKind::Spp => vec![
                (
                    HeadKind::SentencePosition,
                    Target::Class(position_bucket(ctx.sent_pos, dims.sent_pos_classes)),
                ),
                (
                    HeadKind::ParagraphPosition,
                    Target::Class(position_bucket(ctx.para_pos, dims.para_pos_classes)),
                ),
            ],
            LossKind::Sdt => {
                let mut t = Vec::new();
                if !ctx.section_title.is_empty() {
                    t.push((HeadKind::SectionTitle, Target::Bag(&ctx.section_title)));
                }
                if !ctx.doc_title.is_empty() {
                    t.push((HeadKind::DocumentTitle, Target::Bag(&ctx.doc_title)));
                }
                t
            }
        };
        if terms.is_empty() {
            out.insert(kind, None);
            continue;
        }
        let w = F::from_f64(weight);
        let mut total = 0.0;
        for (head_kind, target) in terms {
            let head = params.head(head_kind);
            let (logits, head_cache) = head.forward(&cache.output);
            let (loss, mut d_logits) = match target {
                Target::Bag(t) => bow_xent(&logits, t, normalize_bow)?,
                Target::Class(c) => softmax_xent(&logits, c)?,
            };
            total += loss.to_f64().unwrap_or(f64::NAN);
            d_logits.iter_mut().for_each(|g| *g = *g * w);
            let dx = head.backward(&head_cache, &d_logits, grads.head_mut(head_kind));
            crate::nn::tensor::add_assign(&mut d_emb, &dx);
        }
        out.insert(kind, Some(total));
    }
    encode_backward(&cache, &d_emb, params, grads);
    Ok(out)
}

/// Loss value and full parameter gradient of one objective on one context.
#[derive(Clone, Debug)]
pub struct LossOutput<F> {
    pub loss: f64,
    pub grads: EncoderParams<F>,
}

fn single<F: Real>(kind: LossKind, ctx: &IndexedContext, params: &EncoderParams<F>) -> Result<LossOutput<F>, TrainError> {
    let mut grads = EncoderParams::zeros(params.dims.clone());
    let out = accumulate_context(ctx, params, &[(kind, 1.0)], true, &mut grads)?;
    match out[&kind] {
        Some(loss) => Ok(LossOutput { loss, grads }),
        None => Err(TrainError::BothTitlesEmpty),
    }
}

/// `−log p(prev | s_t) − log p(next | s_t)` under the two neighbor heads.
pub fn nsp_loss<F: Real>(ctx: &IndexedContext, params: &EncoderParams<F>) -> Result<LossOutput<F>, TrainError> {
    single(LossKind::Nsp, ctx, params)
}

/// `−log p(level | s_t)` over seven nesting levels.
pub fn nl_loss<F: Real>(ctx: &IndexedContext, params: &EncoderParams<F>) -> Result<LossOutput<F>, TrainError> {
    single(LossKind::Nl, ctx, params)
}

/// Sentence-position plus paragraph-position cross-entropy.
pub fn spp_loss<F: Real>(ctx: &IndexedContext, params: &EncoderParams<F>) -> Result<LossOutput<F>, TrainError> {
    single(LossKind::Spp, ctx, params)
}

/// Section-title plus document-title bag-of-words loss; an empty title
/// drops its term.
pub fn sdt_loss<F: Real>(ctx: &IndexedContext, params: &EncoderParams<F>) -> Result<LossOutput<F>, TrainError> {
    single(LossKind::Sdt, ctx, params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub head: String,
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
    pub steps: usize,
    /// Contexts whose SDT term was skipped because both titles were empty.
    pub sdt_skipped: usize,
    pub checkpoint: Option<PathBuf>,
}

impl TrainLog {
    /// Loss series of one head, in step order.
    pub fn series(&self, head: &str) -> Vec<f64> {
        self.records.iter().filter(|r| r.head == head).map(|r| r.loss).collect()
    }

    /// Mean of the first `n` and of the last `n` steps of a head.
    pub fn first_last_means(&self, head: &str, n: usize) -> Option<(f64, f64)> {
        let s = self.series(head);
        if s.is_empty() {
            return None;
        }
        let n = n.min(s.len());
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        Some((mean(&s[..n]), mean(&s[s.len() - n..])))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = self.to_jsonl();
        write_atomic(path, |w: &mut dyn Write| w.write_all(text.as_bytes()))
    }
}

/// Contexts per gradient chunk; fixed so results do not depend on the
/// number of worker threads.
const CHUNK: usize = 8;

/// One pass over `contexts` (shuffled once with the config seed). Each batch
/// takes one Adam step on the mean of `Σ weight·loss` over its contexts.
/// Writes a checkpoint at the end when `checkpoint` is given.
pub fn train_epoch(
    contexts: &[IndexedContext],
    config: &LossConfig,
    mut params: EncoderParams<f32>,
    checkpoint: Option<&Path>,
) -> Result<(EncoderParams<f32>, TrainLog), TrainError> {
    config.validate()?;
    if contexts.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut order: Vec<usize> = (0..contexts.len()).collect();
    order.shuffle(&mut derive_rng(config.seed, &["train", "shuffle"]));
    let losses: Vec<(LossKind, f64)> = config.enabled.iter().map(|&k| (k, config.weight(k))).collect();
    let mut adam = AdamState::new(&params, config.adam);
    let mut log = TrainLog::default();

    for (step, batch) in order.chunks(config.batch_size).enumerate() {
        let chunk_results: Vec<Result<(EncoderParams<f32>, Vec<ContextLosses>), TrainError>> = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut g = EncoderParams::zeros(params.dims.clone());
                let mut per = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    per.push(accumulate_context(&contexts[i], &params, &losses, config.normalize_bow, &mut g)?);
                }
                Ok((g, per))
            })
            .collect();
        let mut grads: Option<EncoderParams<f32>> = None;
        let mut sums: BTreeMap<LossKind, (f64, usize)> = BTreeMap::new();
        for r in chunk_results {
            let (g, per) = r?;
            match &mut grads {
                None => grads = Some(g),
                Some(acc) => {
                    for (a, b) in acc.tensors_mut().into_iter().zip(g.tensors()) {
                        a.axpy(1.0, b);
                    }
                }
            }
            for ctx_losses in per {
                for (kind, v) in ctx_losses {
                    let e = sums.entry(kind).or_default();
                    match v {
                        Some(v) => {
                            e.0 += v;
                            e.1 += 1;
                        }
                        None => log.sdt_skipped += 1,
                    }
                }
            }
        }
        let mut grads = grads.expect("batches are nonempty");
        let scale = 1.0 / batch.len() as f32;
        grads.tensors_mut().into_iter().for_each(|t| t.scale(scale));

        for &(kind, _) in &losses {
            let (sum, n) = sums.get(&kind).copied().unwrap_or((0.0, 0));
            let loss = if n == 0 { 0.0 } else { sum / n as f64 };
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    step,
                    head: kind.name().into(),
                });
            }
            log.records.push(StepRecord {
                step,
                head: kind.name().into(),
                loss,
            });
        }
        adam.update(&mut params, &grads)?;
        log.steps = step + 1;
    }
    if let Some(path) = checkpoint {
        save_checkpoint(path, &params, config.seed)?;
        log.checkpoint = Some(path.to_path_buf());
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, EncoderDims, GradCheckOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> IndexedContext {
        IndexedContext {
            target: vec![2, 3, 4],
            prev: vec![5, 6],
            next: vec![7, 2, 2],
            nesting_level: 2,
            sent_pos: 40,
            para_pos: 3,
            section_title: vec![8, 9],
            doc_title: vec![3, 10, 11],
        }
    }

    fn zero_heads(dims: EncoderDims) -> EncoderParams<f64> {
        let mut p = EncoderParams::random(dims, &mut ChaCha8Rng::seed_from_u64(1));
        for h in HeadKind::ALL {
            p.head_mut(h).zero_output_layer();
        }
        p
    }

    #[test]
    fn uniform_head_values() {
        let p = zero_heads(EncoderDims::new(100, 4, 3));
        let c = ctx();
        assert!((nsp_loss(&c, &p).unwrap().loss - 2.0 * 100f64.ln()).abs() < 1e-9);
        assert!((nl_loss(&c, &p).unwrap().loss - 7f64.ln()).abs() < 1e-9);
        assert!((spp_loss(&c, &p).unwrap().loss - (32f64.ln() + 64f64.ln())).abs() < 1e-9);
        assert!((sdt_loss(&c, &p).unwrap().loss - 2.0 * 100f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn duplicate_neighbors_and_skips() {
        let p = EncoderParams::<f64>::random(EncoderDims::new(20, 4, 3), &mut ChaCha8Rng::seed_from_u64(2));
        let mut c = ctx();
        c.next = c.prev.clone();
        let both = nsp_loss(&c, &p).unwrap().loss;
        let mut one = EncoderParams::zeros(p.dims.clone());
        let single = accumulate_context(&c, &p, &[(LossKind::Nsp, 1.0)], true, &mut one).unwrap();
        assert_eq!(single[&LossKind::Nsp], Some(both));
        let emb = crate::nn::bigru_encode(&c.target, &p).unwrap();
        let prev = crate::nn::bow_log_prob(&emb, &c.prev, p.head(HeadKind::NspPrev), true).unwrap().loss;
        let next = crate::nn::bow_log_prob(&emb, &c.next, p.head(HeadKind::NspNext), true).unwrap().loss;
        assert!((both - prev - next).abs() < 1e-12);

        let mut c = ctx();
        c.section_title.clear();
        let doc_only = sdt_loss(&c, &p).unwrap().loss;
        let emb = crate::nn::bigru_encode(&c.target, &p).unwrap();
        let want = crate::nn::bow_log_prob(&emb, &c.doc_title, p.head(HeadKind::DocumentTitle), true).unwrap().loss;
        assert!((doc_only - want).abs() < 1e-12);
        c.doc_title.clear();
        assert!(matches!(sdt_loss(&c, &p), Err(TrainError::BothTitlesEmpty)));
    }

    #[test]
    fn clamp_and_level_mapping() {
        assert_eq!(position_bucket(200, 32), 31);
        assert_eq!(position_bucket(3, 32), 3);
        assert_eq!(level_class(1).unwrap(), 0);
        assert!(matches!(level_class(8), Err(TrainError::LevelOutOfRange(8))));
    }

    #[test]
    fn additivity() {
        let p = EncoderParams::<f64>::random(EncoderDims::new(20, 4, 3), &mut ChaCha8Rng::seed_from_u64(3));
        let c = ctx();
        let mut g = EncoderParams::zeros(p.dims.clone());
        let all: Vec<(LossKind, f64)> = LossKind::ALL.iter().map(|&k| (k, 1.0)).collect();
        let out = accumulate_context(&c, &p, &all, true, &mut g).unwrap();
        let total: f64 = out.values().map(|v| v.unwrap()).sum();
        let parts = nsp_loss(&c, &p).unwrap().loss
            + nl_loss(&c, &p).unwrap().loss
            + spp_loss(&c, &p).unwrap().loss
            + sdt_loss(&c, &p).unwrap().loss;
        assert!((total - parts).abs() < 1e-10);
    }

    fn check(kind: LossKind) {
        let dims = EncoderDims::new(12, 3, 3);
        let p = EncoderParams::<f64>::random(dims, &mut ChaCha8Rng::seed_from_u64(4));
        let mut c = ctx();
        c.target = vec![2, 3, 4];
        c.prev = vec![5, 6];
        c.next = vec![7, 2];
        c.section_title = vec![8, 9];
        c.doc_title = vec![3, 10, 11];
        let theta = p.flatten();
        let template = p.clone();
        let report = grad_check(
            |x| {
                let mut q = template.clone();
                q.assign_flat(x).unwrap();
                let out = single(kind, &c, &q).unwrap();
                (out.loss, out.grads.flatten())
            },
            &theta,
            &GradCheckOptions::default(),
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-3, "{kind}: {report:?}");
    }

    #[test]
    fn gradients_nsp() {
        check(LossKind::Nsp);
    }

    #[test]
    fn gradients_nl() {
        check(LossKind::Nl);
    }

    #[test]
    fn gradients_spp() {
        check(LossKind::Spp);
    }

    #[test]
    fn gradients_sdt() {
        check(LossKind::Sdt);
    }
}
