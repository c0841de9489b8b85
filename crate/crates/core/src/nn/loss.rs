use super::feedforward::FeedForward;
use super::tensor::Real;
use super::NnError;

/// Numerically stable softmax (max-subtracted).
pub fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `log Σ exp(logits)`, max-subtracted.
pub fn log_sum_exp<F: Real>(logits: &[F]) -> F {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let total: F = logits.iter().map(|&l| (l - max).exp()).sum();
    max + total.ln()
}

/// Cross-entropy of `softmax(logits)` against one class.
/// Returns the loss and its gradient with respect to the logits.
pub fn softmax_xent<F: Real>(logits: &[F], label: usize) -> Result<(F, Vec<F>), NnError> {
    if label >= logits.len() {
        return Err(NnError::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let lse = log_sum_exp(logits);
    let loss = (lse - logits[label]).max(F::zero());
    let mut grad = softmax(logits);
    grad[label] = grad[label] - F::one();
    Ok((loss, grad))
}

/// Bag-of-words negative log-likelihood over the logits of a vocabulary
/// head. Repeated tokens count with multiplicity. With `normalize`, the sum
/// is divided by the bag size.
pub fn bow_xent<F: Real>(logits: &[F], targets: &[usize], normalize: bool) -> Result<(F, Vec<F>), NnError> {
    if targets.is_empty() {
        return Err(NnError::EmptyTarget);
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= logits.len()) {
        return Err(NnError::LabelOutOfRange {
            label: bad,
            classes: logits.len(),
        });
    }
    let lse = log_sum_exp(logits);
    let n = F::from_f64(targets.len() as f64);
    let scale = if normalize { F::one() / n } else { F::one() };
    let mut loss = F::zero();
    for &t in targets {
        loss = loss + (lse - logits[t]);
    }
    loss = (loss * scale).max(F::zero());
    let probs = softmax(logits);
    let mut grad: Vec<F> = probs.into_iter().map(|p| p * n * scale).collect();
    for &t in targets {
        grad[t] = grad[t] - scale;
    }
    Ok((loss, grad))
}

/// Result of scoring a target through a head: loss, head gradients, and the
/// gradient flowing back into the sentence embedding.
#[derive(Clone, Debug)]
pub struct HeadLoss<F> {
    pub loss: F,
    pub head_grads: FeedForward<F>,
    pub d_embedding: Vec<F>,
}

/// `−log p(target | embedding)` under a bag-of-words decoder head.
pub fn bow_log_prob<F: Real>(
    embedding: &[F],
    targets: &[usize],
    head: &FeedForward<F>,
    normalize: bool,
) -> Result<HeadLoss<F>, NnError> {
    if embedding.len() != head.input_dim() {
        return Err(NnError::DimMismatch {
            expected: head.input_dim(),
            found: embedding.len(),
        });
    }
    let (logits, cache) = head.forward(embedding);
    let (loss, d_logits) = bow_xent(&logits, targets, normalize)?;
    let mut head_grads = FeedForward::zeros(head.input_dim(), head.hidden_dim(), head.outputs());
    let d_embedding = head.backward(&cache, &d_logits, &mut head_grads);
    Ok(HeadLoss {
        loss,
        head_grads,
        d_embedding,
    })
}

/// `−log p(label | embedding)` under a classification head.
pub fn class_log_prob<F: Real>(embedding: &[F], label: usize, head: &FeedForward<F>) -> Result<HeadLoss<F>, NnError> {
    if embedding.len() != head.input_dim() {
        return Err(NnError::DimMismatch {
            expected: head.input_dim(),
            found: embedding.len(),
        });
    }
    let (logits, cache) = head.forward(embedding);
    let (loss, d_logits) = softmax_xent(&logits, label)?;
    let mut head_grads = FeedForward::zeros(head.input_dim(), head.hidden_dim(), head.outputs());
    let d_embedding = head.backward(&cache, &d_logits, &mut head_grads);
    Ok(HeadLoss {
        loss,
        head_grads,
        d_embedding,
    })
}
