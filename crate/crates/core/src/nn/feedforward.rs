use rand::Rng;

use super::tensor::{add_assign, matvec_add, matvec_t_add, outer_add, Parameters, Real, Tensor};
use super::{init_matrix, NnError};

/// Decoder head: two ReLU hidden layers followed by a linear output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedForward<F> {
    pub w1: Tensor<F>,
    pub b1: Tensor<F>,
    pub w2: Tensor<F>,
    pub b2: Tensor<F>,
    pub w_out: Tensor<F>,
    pub b_out: Tensor<F>,
}

#[derive(Clone, Debug)]
pub struct FeedForwardCache<F> {
    x: Vec<F>,
    a1: Vec<F>,
    h1: Vec<F>,
    a2: Vec<F>,
    h2: Vec<F>,
}

impl<F: Real> FeedForward<F> {
    pub fn zeros(input_dim: usize, hidden: usize, outputs: usize) -> Self {
        FeedForward {
            w1: Tensor::zeros(&[hidden, input_dim]),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::zeros(&[hidden, hidden]),
            b2: Tensor::zeros(&[hidden]),
            w_out: Tensor::zeros(&[outputs, hidden]),
            b_out: Tensor::zeros(&[outputs]),
        }
    }

    pub fn random<R: Rng>(input_dim: usize, hidden: usize, outputs: usize, rng: &mut R) -> Self {
        let mut ff = Self::zeros(input_dim, hidden, outputs);
        init_matrix(&mut ff.w1, rng);
        init_matrix(&mut ff.w2, rng);
        init_matrix(&mut ff.w_out, rng);
        ff
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn outputs(&self) -> usize {
        self.w_out.rows()
    }

    /// Zeroes the output layer so every logit starts at zero.
    pub fn zero_output_layer(&mut self) {
        self.w_out.fill_zero();
        self.b_out.fill_zero();
    }

    pub fn forward(&self, x: &[F]) -> (Vec<F>, FeedForwardCache<F>) {
        let relu = |v: &[F]| v.iter().map(|&a| a.max(F::zero())).collect::<Vec<F>>();
        let mut a1 = self.b1.data().to_vec();
        matvec_add(&self.w1, x, &mut a1);
        let h1 = relu(&a1);
        let mut a2 = self.b2.data().to_vec();
        matvec_add(&self.w2, &h1, &mut a2);
        let h2 = relu(&a2);
        let mut logits = self.b_out.data().to_vec();
        matvec_add(&self.w_out, &h2, &mut logits);
        (
            logits,
            FeedForwardCache {
                x: x.to_vec(),
                a1,
                h1,
                a2,
                h2,
            },
        )
    }

    /// Accumulates parameter gradients into `grads`; returns d(loss)/d(input).
    pub fn backward(&self, cache: &FeedForwardCache<F>, d_logits: &[F], grads: &mut FeedForward<F>) -> Vec<F> {
        outer_add(&mut grads.w_out, d_logits, &cache.h2);
        add_assign(grads.b_out.data_mut(), d_logits);
        let mut d_h2 = vec![F::zero(); self.hidden_dim()];
        matvec_t_add(&self.w_out, d_logits, &mut d_h2);

        let d_a2: Vec<F> = d_h2
            .iter()
            .zip(&cache.a2)
            .map(|(&g, &a)| if a > F::zero() { g } else { F::zero() })
            .collect();
        outer_add(&mut grads.w2, &d_a2, &cache.h1);
        add_assign(grads.b2.data_mut(), &d_a2);
        let mut d_h1 = vec![F::zero(); self.hidden_dim()];
        matvec_t_add(&self.w2, &d_a2, &mut d_h1);

        let d_a1: Vec<F> = d_h1
            .iter()
            .zip(&cache.a1)
            .map(|(&g, &a)| if a > F::zero() { g } else { F::zero() })
            .collect();
        outer_add(&mut grads.w1, &d_a1, &cache.x);
        add_assign(grads.b1.data_mut(), &d_a1);
        let mut dx = vec![F::zero(); self.input_dim()];
        matvec_t_add(&self.w1, &d_a1, &mut dx);
        dx
    }

    pub const TENSOR_NAMES: [&'static str; 6] = ["w1", "b1", "w2", "b2", "w_out", "b_out"];
}

impl<F: Real> Parameters<F> for FeedForward<F> {
    fn tensors(&self) -> Vec<&Tensor<F>> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2, &self.w_out, &self.b_out]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>> {
        vec![
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }
}

/// Applies a head to an input vector, returning its logits.
pub fn feedforward_apply<F: Real>(x: &[F], head: &FeedForward<F>) -> Result<Vec<F>, NnError> {
    if x.len() != head.input_dim() {
        return Err(NnError::DimMismatch {
            expected: head.input_dim(),
            found: x.len(),
        });
    }
    Ok(head.forward(x).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{grad_check, GradCheckOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_emit_output_bias() {
        let mut ff = FeedForward::<f64>::zeros(3, 4, 2);
        ff.b_out.data_mut().copy_from_slice(&[0.5, -1.5]);
        assert_eq!(feedforward_apply(&[1.0, 2.0, 3.0], &ff).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn dead_relus_emit_output_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ff = FeedForward::<f64>::random(3, 4, 2, &mut rng);
        ff.b1.data_mut().iter_mut().for_each(|b| *b = -100.0);
        ff.b2.data_mut().iter_mut().for_each(|b| *b = -100.0);
        ff.b_out.data_mut().copy_from_slice(&[0.25, 0.75]);
        assert_eq!(feedforward_apply(&[0.1, 0.2, 0.3], &ff).unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn rejects_wrong_input_dim() {
        let ff = FeedForward::<f32>::zeros(3, 4, 2);
        assert!(feedforward_apply(&[1.0], &ff).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ff = FeedForward::<f64>::random(5, 6, 4, &mut rng);
        let x = [0.3, -0.1, 0.8, -0.5, 0.2];
        let w = [1.0, -2.0, 0.5, 3.0];
        let objective = |flat: &[f64]| {
            let mut q = ff.clone();
            q.assign_flat(flat).unwrap();
            let (logits, cache) = q.forward(&x);
            let loss = logits.iter().zip(&w).map(|(a, b)| a * b).sum();
            let mut g = FeedForward::zeros(5, 6, 4);
            q.backward(&cache, &w, &mut g);
            (loss, g.flatten())
        };
        let report = grad_check(objective, &ff.flatten(), &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < 1e-3, "{report:?}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ff = FeedForward::<f64>::random(5, 6, 4, &mut rng);
        let w = [1.0, -2.0, 0.5, 3.0];
        let objective = |x: &[f64]| {
            let (logits, cache) = ff.forward(x);
            let loss = logits.iter().zip(&w).map(|(a, b)| a * b).sum();
            let mut g = FeedForward::zeros(5, 6, 4);
            (loss, ff.backward(&cache, &w, &mut g))
        };
        let x = [0.3, -0.1, 0.8, -0.5, 0.2];
        let report = grad_check(objective, &x, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < 1e-3, "{report:?}");
    }
}
