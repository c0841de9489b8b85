//! Gated recurrent unit with a hand-derived backward pass.
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```

use rand::Rng;

use super::tensor::{matvec_add, matvec_t_add, outer_add, sigmoid, Parameters, Real, Tensor};
use super::{init_matrix, NnError};

#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<F> {
    pub w_z: Tensor<F>,
    pub w_r: Tensor<F>,
    pub w_h: Tensor<F>,
    pub u_z: Tensor<F>,
    pub u_r: Tensor<F>,
    pub u_h: Tensor<F>,
    pub b_z: Tensor<F>,
    pub b_r: Tensor<F>,
    pub b_h: Tensor<F>,
}

impl<F: Real> GruParams<F> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || Tensor::zeros(&[hidden_dim, input_dim]);
        let u = || Tensor::zeros(&[hidden_dim, hidden_dim]);
        let b = || Tensor::zeros(&[hidden_dim]);
        GruParams {
            w_z: w(),
            w_r: w(),
            w_h: w(),
            u_z: u(),
            u_r: u(),
            u_h: u(),
            b_z: b(),
            b_r: b(),
            b_h: b(),
        }
    }

    pub fn random<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        for m in [
            &mut p.w_z, &mut p.w_r, &mut p.w_h, &mut p.u_z, &mut p.u_r, &mut p.u_h,
        ] {
            init_matrix(m, rng);
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.rows()
    }

    pub const TENSOR_NAMES: [&'static str; 9] =
        ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"];
}

impl<F: Real> Parameters<F> for GruParams<F> {
    fn tensors(&self) -> Vec<&Tensor<F>> {
        vec![
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z,
            &self.b_r, &self.b_h,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>> {
        vec![
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }
}

/// Activations retained from one forward step for the backward pass.
#[derive(Clone, Debug)]
pub struct GruStep<F> {
    pub h_prev: Vec<F>,
    pub z: Vec<F>,
    pub r: Vec<F>,
    pub cand: Vec<F>,
    pub h: Vec<F>,
}

/// One GRU update `h' = gru(x, h)`.
pub fn gru_cell<F: Real>(x: &[F], h: &[F], p: &GruParams<F>) -> Result<Vec<F>, NnError> {
    if x.len() != p.input_dim() {
        return Err(NnError::DimMismatch {
            expected: p.input_dim(),
            found: x.len(),
        });
    }
    if h.len() != p.hidden_dim() {
        return Err(NnError::DimMismatch {
            expected: p.hidden_dim(),
            found: h.len(),
        });
    }
    Ok(gru_step(x, h, p).h)
}

pub(crate) fn gru_step<F: Real>(x: &[F], h: &[F], p: &GruParams<F>) -> GruStep<F> {
    let hd = p.hidden_dim();
    let mut z = p.b_z.data().to_vec();
    matvec_add(&p.w_z, x, &mut z);
    matvec_add(&p.u_z, h, &mut z);
    z.iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut r = p.b_r.data().to_vec();
    matvec_add(&p.w_r, x, &mut r);
    matvec_add(&p.u_r, h, &mut r);
    r.iter_mut().for_each(|v| *v = sigmoid(*v));

    let rh: Vec<F> = r.iter().zip(h).map(|(&a, &b)| a * b).collect();
    let mut cand = p.b_h.data().to_vec();
    matvec_add(&p.w_h, x, &mut cand);
    matvec_add(&p.u_h, &rh, &mut cand);
    cand.iter_mut().for_each(|v| *v = v.tanh());

    let mut out = vec![F::zero(); hd];
    for i in 0..hd {
        out[i] = (F::one() - z[i]) * h[i] + z[i] * cand[i];
    }
    GruStep {
        h_prev: h.to_vec(),
        z,
        r,
        cand,
        h: out,
    }
}

/// Backpropagates `dh` (gradient w.r.t. the step output) through one step.
/// Accumulates parameter gradients into `grads` and input gradients into
/// `dx`; returns the gradient w.r.t. the previous hidden state.
pub(crate) fn gru_step_backward<F: Real>(
    x: &[F],
    step: &GruStep<F>,
    dh: &[F],
    p: &GruParams<F>,
    grads: &mut GruParams<F>,
    dx: &mut [F],
) -> Vec<F> {
    let hd = p.hidden_dim();
    let one = F::one();
    let h = &step.h_prev;

    let mut dh_prev = vec![F::zero(); hd];
    let mut da_z = vec![F::zero(); hd];
    let mut da_h = vec![F::zero(); hd];
    for i in 0..hd {
        let z = step.z[i];
        let c = step.cand[i];
        dh_prev[i] = dh[i] * (one - z);
        da_z[i] = dh[i] * (c - h[i]) * z * (one - z);
        da_h[i] = dh[i] * z * (one - c * c);
    }

    // candidate path
    let rh: Vec<F> = step.r.iter().zip(h).map(|(&a, &b)| a * b).collect();
    outer_add(&mut grads.w_h, &da_h, x);
    outer_add(&mut grads.u_h, &da_h, &rh);
    super::tensor::add_assign(grads.b_h.data_mut(), &da_h);
    matvec_t_add(&p.w_h, &da_h, dx);
    let mut d_rh = vec![F::zero(); hd];
    matvec_t_add(&p.u_h, &da_h, &mut d_rh);

    let mut da_r = vec![F::zero(); hd];
    for i in 0..hd {
        let r = step.r[i];
        dh_prev[i] = dh_prev[i] + d_rh[i] * r;
        da_r[i] = d_rh[i] * h[i] * r * (one - r);
    }

    // update gate
    outer_add(&mut grads.w_z, &da_z, x);
    outer_add(&mut grads.u_z, &da_z, h);
    super::tensor::add_assign(grads.b_z.data_mut(), &da_z);
    matvec_t_add(&p.w_z, &da_z, dx);
    matvec_t_add(&p.u_z, &da_z, &mut dh_prev);

    // reset gate
    outer_add(&mut grads.w_r, &da_r, x);
    outer_add(&mut grads.u_r, &da_r, h);
    super::tensor::add_assign(grads.b_r.data_mut(), &da_r);
    matvec_t_add(&p.w_r, &da_r, dx);
    matvec_t_add(&p.u_r, &da_r, &mut dh_prev);

    dh_prev
}
