//! Bidirectional GRU sentence encoder with mean pooling, plus the decoder
//! heads used by the training objectives.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::feedforward::FeedForward;
use super::gru::{gru_step, gru_step_backward, GruParams, GruStep};
use super::tensor::{Parameters, Real, Tensor};
use super::NnError;

/// Decoder heads, in checkpoint order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    NspPrev,
    NspNext,
    NestingLevel,
    SentencePosition,
    ParagraphPosition,
    SectionTitle,
    DocumentTitle,
}

impl HeadKind {
    pub const ALL: [HeadKind; 7] = [
        HeadKind::NspPrev,
        HeadKind::NspNext,
        HeadKind::NestingLevel,
        HeadKind::SentencePosition,
        HeadKind::ParagraphPosition,
        HeadKind::SectionTitle,
        HeadKind::DocumentTitle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::NspPrev => "nsp_prev",
            HeadKind::NspNext => "nsp_next",
            HeadKind::NestingLevel => "nl",
            HeadKind::SentencePosition => "spp_sentence",
            HeadKind::ParagraphPosition => "spp_paragraph",
            HeadKind::SectionTitle => "sdt_section",
            HeadKind::DocumentTitle => "sdt_document",
        }
    }

    fn index(self) -> usize {
        HeadKind::ALL.iter().position(|&h| h == self).unwrap()
    }

    /// Output width of the head given the encoder dimensions.
    pub fn outputs(self, dims: &EncoderDims) -> usize {
        match self {
            HeadKind::NspPrev | HeadKind::NspNext | HeadKind::SectionTitle | HeadKind::DocumentTitle => {
                dims.vocab_size
            }
            HeadKind::NestingLevel => dims.nl_classes,
            HeadKind::SentencePosition => dims.sent_pos_classes,
            HeadKind::ParagraphPosition => dims.para_pos_classes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub vocab_size: usize,
    pub word_dim: usize,
    pub hidden_dim: usize,
    /// Width of both hidden layers in every decoder head.
    pub head_hidden: usize,
    pub nl_classes: usize,
    pub sent_pos_classes: usize,
    pub para_pos_classes: usize,
}

impl EncoderDims {
    /// Dimensions with the default head widths: head hidden width equal to
    /// the sentence-embedding width, 7 nesting levels, position caps 32/64.
    pub fn new(vocab_size: usize, word_dim: usize, hidden_dim: usize) -> Self {
        EncoderDims {
            vocab_size,
            word_dim,
            hidden_dim,
            head_hidden: 2 * hidden_dim,
            nl_classes: 7,
            sent_pos_classes: 32,
            para_pos_classes: 64,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        2 * self.hidden_dim
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams<F> {
    pub dims: EncoderDims,
    pub embedding: Tensor<F>,
    pub forward: GruParams<F>,
    pub backward: GruParams<F>,
    heads: Vec<FeedForward<F>>,
}

impl<F: Real> EncoderParams<F> {
    pub fn zeros(dims: EncoderDims) -> Self {
        let e = dims.embedding_dim();
        let heads = HeadKind::ALL
            .iter()
            .map(|h| FeedForward::zeros(e, dims.head_hidden, h.outputs(&dims)))
            .collect();
        EncoderParams {
            embedding: Tensor::zeros(&[dims.vocab_size, dims.word_dim]),
            forward: GruParams::zeros(dims.word_dim, dims.hidden_dim),
            backward: GruParams::zeros(dims.word_dim, dims.hidden_dim),
            heads,
            dims,
        }
    }

    /// Uniform `±1/√fan_in` matrices, zero biases, embeddings uniform in
    /// `[−0.05, 0.05]`.
    pub fn random<R: Rng>(dims: EncoderDims, rng: &mut R) -> Self {
        let e = dims.embedding_dim();
        let mut embedding = Tensor::zeros(&[dims.vocab_size, dims.word_dim]);
        for v in embedding.data_mut() {
            *v = F::from_f64(rng.random_range(-0.05..=0.05));
        }
        let forward = GruParams::random(dims.word_dim, dims.hidden_dim, rng);
        let backward = GruParams::random(dims.word_dim, dims.hidden_dim, rng);
        let heads = HeadKind::ALL
            .iter()
            .map(|h| FeedForward::random(e, dims.head_hidden, h.outputs(&dims), rng))
            .collect();
        EncoderParams {
            dims,
            embedding,
            forward,
            backward,
            heads,
        }
    }

    pub fn head(&self, kind: HeadKind) -> &FeedForward<F> {
        &self.heads[kind.index()]
    }

    pub fn head_mut(&mut self, kind: HeadKind) -> &mut FeedForward<F> {
        &mut self.heads[kind.index()]
    }

    pub fn embedding_dim(&self) -> usize {
        self.dims.embedding_dim()
    }

    pub fn cast<G: Real>(&self) -> EncoderParams<G> {
        let mut out = EncoderParams::<G>::zeros(self.dims.clone());
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.cast();
        }
        out
    }

    /// Qualified tensor names, aligned with [`Parameters::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = vec!["embedding".to_string()];
        for prefix in ["gru_fwd", "gru_bwd"] {
            names.extend(GruParams::<F>::TENSOR_NAMES.iter().map(|n| format!("{prefix}.{n}")));
        }
        for h in HeadKind::ALL {
            names.extend(
                FeedForward::<F>::TENSOR_NAMES
                    .iter()
                    .map(|n| format!("{}.{n}", h.name())),
            );
        }
        names
    }
}

impl<F: Real> Parameters<F> for EncoderParams<F> {
    fn tensors(&self) -> Vec<&Tensor<F>> {
        let mut out = vec![&self.embedding];
        out.extend(self.forward.tensors());
        out.extend(self.backward.tensors());
        for h in &self.heads {
            out.extend(h.tensors());
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = vec![&mut self.embedding];
        out.extend(self.forward.tensors_mut());
        out.extend(self.backward.tensors_mut());
        for h in &mut self.heads {
            out.extend(h.tensors_mut());
        }
        out
    }
}

/// Forward activations of one encoded sentence.
#[derive(Clone, Debug)]
pub struct EncodeCache<F> {
    tokens: Vec<usize>,
    fwd: Vec<GruStep<F>>,
    /// Backward-direction steps in processing order (last token first).
    bwd: Vec<GruStep<F>>,
    pub output: Vec<F>,
}

fn check_tokens<F: Real>(tokens: &[usize], p: &EncoderParams<F>) -> Result<(), NnError> {
    if tokens.is_empty() {
        return Err(NnError::EmptySequence);
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t >= p.dims.vocab_size) {
        return Err(NnError::IndexOutOfVocab {
            index: bad,
            vocab: p.dims.vocab_size,
        });
    }
    Ok(())
}

/// Encodes a token sequence as the mean over positions of `[fwd_t; bwd_t]`.
pub fn bigru_encode<F: Real>(tokens: &[usize], p: &EncoderParams<F>) -> Result<Vec<F>, NnError> {
    Ok(encode_cached(tokens, p)?.output)
}

pub fn encode_cached<F: Real>(tokens: &[usize], p: &EncoderParams<F>) -> Result<EncodeCache<F>, NnError> {
    check_tokens(tokens, p)?;
    let hd = p.dims.hidden_dim;
    let n = tokens.len();

    let mut fwd = Vec::with_capacity(n);
    let mut h = vec![F::zero(); hd];
    for &t in tokens {
        let step = gru_step(p.embedding.row(t), &h, &p.forward);
        h.clone_from(&step.h);
        fwd.push(step);
    }
    let mut bwd = Vec::with_capacity(n);
    let mut h = vec![F::zero(); hd];
    for &t in tokens.iter().rev() {
        let step = gru_step(p.embedding.row(t), &h, &p.backward);
        h.clone_from(&step.h);
        bwd.push(step);
    }

    let inv = F::one() / F::from_f64(n as f64);
    let mut output = vec![F::zero(); 2 * hd];
    for s in &fwd {
        for (o, &v) in output[..hd].iter_mut().zip(&s.h) {
            *o = *o + v;
        }
    }
    for s in &bwd {
        for (o, &v) in output[hd..].iter_mut().zip(&s.h) {
            *o = *o + v;
        }
    }
    output.iter_mut().for_each(|v| *v = *v * inv);
    Ok(EncodeCache {
        tokens: tokens.to_vec(),
        fwd,
        bwd,
        output,
    })
}

/// Backpropagation through time from the pooled-output gradient. Only the
/// embedding rows of the encoded tokens and the two GRUs receive gradient.
pub fn encode_backward<F: Real>(
    cache: &EncodeCache<F>,
    d_output: &[F],
    p: &EncoderParams<F>,
    grads: &mut EncoderParams<F>,
) {
    let hd = p.dims.hidden_dim;
    let n = cache.tokens.len();
    let inv = F::one() / F::from_f64(n as f64);
    let d_fwd: Vec<F> = d_output[..hd].iter().map(|&g| g * inv).collect();
    let d_bwd: Vec<F> = d_output[hd..].iter().map(|&g| g * inv).collect();
    let wd = p.dims.word_dim;

    let mut dh = vec![F::zero(); hd];
    for (i, step) in cache.fwd.iter().enumerate().rev() {
        super::tensor::add_assign(&mut dh, &d_fwd);
        let tok = cache.tokens[i];
        let mut dx = vec![F::zero(); wd];
        dh = gru_step_backward(p.embedding.row(tok), step, &dh, &p.forward, &mut grads.forward, &mut dx);
        super::tensor::add_assign(grads.embedding.row_mut(tok), &dx);
    }

    let mut dh = vec![F::zero(); hd];
    for (k, step) in cache.bwd.iter().enumerate().rev() {
        super::tensor::add_assign(&mut dh, &d_bwd);
        let tok = cache.tokens[n - 1 - k];
        let mut dx = vec![F::zero(); wd];
        dh = gru_step_backward(p.embedding.row(tok), step, &dh, &p.backward, &mut grads.backward, &mut dx);
        super::tensor::add_assign(grads.embedding.row_mut(tok), &dx);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{grad_check, GradCheckOptions};
    use crate::nn::gru::gru_cell;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(seed: u64) -> EncoderParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = EncoderParams::random(EncoderDims::new(12, 5, 4), &mut rng);
        // larger embeddings so the recurrences are far from linear
        for v in p.embedding.data_mut() {
            *v *= 10.0;
        }
        p
    }

    #[test]
    fn zero_params_encode_to_zero() {
        let p = EncoderParams::<f32>::zeros(EncoderDims::new(10, 3, 4));
        assert_eq!(bigru_encode(&[1, 2, 3], &p).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn single_token_has_symmetric_halves_for_shared_weights() {
        let mut p = small(1);
        p.backward = p.forward.clone();
        let out = bigru_encode(&[7], &p).unwrap();
        let h = gru_cell(p.embedding.row(7), &[0.0; 4], &p.forward).unwrap();
        assert_eq!(&out[..4], &h[..]);
        assert_eq!(&out[4..], &h[..]);
    }

    #[test]
    fn single_token_is_one_step_per_direction() {
        let p = small(2);
        let out = bigru_encode(&[3], &p).unwrap();
        let f = gru_cell(p.embedding.row(3), &[0.0; 4], &p.forward).unwrap();
        let b = gru_cell(p.embedding.row(3), &[0.0; 4], &p.backward).unwrap();
        assert_eq!(&out[..4], &f[..]);
        assert_eq!(&out[4..], &b[..]);
    }

    #[test]
    fn reversal_swaps_directions() {
        // swapping the two GRUs and reversing the input swaps the halves
        let p = small(3);
        let mut swapped = p.clone();
        std::mem::swap(&mut swapped.forward, &mut swapped.backward);
        let toks = [1, 4, 9, 2, 11];
        let rev: Vec<usize> = toks.iter().rev().copied().collect();
        let a = bigru_encode(&toks, &p).unwrap();
        let b = bigru_encode(&rev, &swapped).unwrap();
        for i in 0..4 {
            assert!((a[i] - b[i + 4]).abs() < 1e-12);
            assert!((a[i + 4] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn order_matters() {
        let p = small(4);
        let a = bigru_encode(&[1, 2, 3, 4, 5], &p).unwrap();
        let b = bigru_encode(&[3, 1, 5, 2, 4], &p).unwrap();
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff > 1e-6);
    }

    #[test]
    fn errors() {
        let p = small(5);
        assert!(matches!(bigru_encode(&[], &p), Err(NnError::EmptySequence)));
        assert!(matches!(
            bigru_encode(&[12], &p),
            Err(NnError::IndexOutOfVocab { index: 12, vocab: 12 })
        ));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let p = small(6);
        let toks = [1, 4, 1, 9, 2];
        let w: Vec<f64> = (0..8).map(|i| (i as f64 - 3.5) / 2.0).collect();
        let objective = |flat: &[f64]| {
            let mut q = p.clone();
            q.assign_flat(flat).unwrap();
            let cache = encode_cached(&toks, &q).unwrap();
            let loss = cache.output.iter().zip(&w).map(|(a, b)| a * b).sum();
            let mut g = EncoderParams::zeros(q.dims.clone());
            encode_backward(&cache, &w, &q, &mut g);
            (loss, g.flatten())
        };
        let opts = GradCheckOptions {
            max_coords: Some(400),
            ..Default::default()
        };
        let report = grad_check(objective, &p.flatten(), &opts).unwrap();
        assert!(report.max_rel_error < 1e-3, "{report:?}");
    }
}
