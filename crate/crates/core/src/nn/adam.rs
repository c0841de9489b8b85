use serde::{Deserialize, Serialize};

use super::tensor::{Parameters, Real};
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators for every tensor of a parameter set, in
/// [`Parameters::tensors`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> AdamState<F> {
    pub fn new<P: Parameters<F>>(params: &P, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        AdamState {
            config,
            step: 0,
            m: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
        }
    }

    /// One bias-corrected Adam update of `params` using `grads`.
    pub fn update<P: Parameters<F>>(&mut self, params: &mut P, grads: &P) -> Result<(), NnError> {
        let gs = grads.tensors();
        let ps = params.tensors_mut();
        if gs.len() != ps.len() || ps.len() != self.m.len() {
            return Err(NnError::ShapeMismatch(format!(
                "{} parameter tensors, {} gradient tensors, {} moment slots",
                ps.len(),
                gs.len(),
                self.m.len()
            )));
        }
        for (i, (p, g)) in ps.iter().zip(&gs).enumerate() {
            if p.shape() != g.shape() || p.len() != self.m[i].len() {
                return Err(NnError::ShapeMismatch(format!(
                    "tensor {i}: parameter {:?} vs gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }

        self.step += 1;
        let c = &self.config;
        let b1 = F::from_f64(c.beta1);
        let b2 = F::from_f64(c.beta2);
        let one = F::one();
        let bc1 = F::from_f64(1.0 - c.beta1.powi(self.step as i32));
        let bc2 = F::from_f64(1.0 - c.beta2.powi(self.step as i32));
        let lr = F::from_f64(c.lr);
        let eps = F::from_f64(c.eps);

        for ((p, g), (m, v)) in ps.into_iter().zip(gs).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + (one - b1) * gi;
                *vi = b2 * *vi + (one - b2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Functional form: returns the updated parameters and state, leaving the
/// inputs untouched.
pub fn adam_step<F: Real, P: Parameters<F> + Clone>(
    params: &P,
    grads: &P,
    state: &AdamState<F>,
) -> Result<(P, AdamState<F>), NnError> {
    let mut p = params.clone();
    let mut s = state.clone();
    s.update(&mut p, grads)?;
    Ok((p, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::feedforward::FeedForward;
    use crate::nn::tensor::Tensor;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Clone, Debug, PartialEq)]
    struct Scalar(Tensor<f64>);

    impl Parameters<f64> for Scalar {
        fn tensors(&self) -> Vec<&Tensor<f64>> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut Tensor<f64>> {
            vec![&mut self.0]
        }
    }

    fn scalar(v: f64) -> Scalar {
        Scalar(Tensor::from_vec(&[1], vec![v]).unwrap())
    }

    #[test]
    fn first_step_moves_by_lr() {
        let p = scalar(1.0);
        let state = AdamState::new(&p, AdamConfig::default());
        let (q, s) = adam_step(&p, &scalar(0.5), &state).unwrap();
        assert!((q.0.data()[0] - (1.0 - 0.001)).abs() < 1e-9);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn purity() {
        let p = scalar(0.3);
        let state = AdamState::new(&p, AdamConfig::default());
        let a = adam_step(&p, &scalar(-2.0), &state).unwrap();
        let b = adam_step(&p, &scalar(-2.0), &state).unwrap();
        assert_eq!(a, b);
        assert_eq!(state.step, 0);
    }

    #[test]
    fn shape_mismatch() {
        let p = scalar(0.0);
        let mut state = AdamState::new(&p, AdamConfig::default());
        let bad = Scalar(Tensor::zeros(&[2]));
        let mut p2 = p.clone();
        assert!(matches!(state.update(&mut p2, &bad), Err(NnError::ShapeMismatch(_))));
    }

    proptest! {
        #[test]
        fn zero_gradient_is_identity(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = FeedForward::<f64>::random(3, 4, 2, &mut rng);
            let g = FeedForward::zeros(3, 4, 2);
            let state = AdamState::new(&p, AdamConfig::default());
            let (q, s) = adam_step(&p, &g, &state).unwrap();
            prop_assert_eq!(q, p);
            prop_assert_eq!(s.step, 1);
        }
    }
}
