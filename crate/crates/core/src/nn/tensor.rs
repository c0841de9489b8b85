use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

use super::NnError;

/// Scalar type used by every numeric kernel. Training runs in `f32`,
/// gradient checking in `f64`.
pub trait Real: Float + Debug + Default + Send + Sync + Sum + 'static {
    fn from_f64(x: f64) -> Self;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
}

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![F::zero(); len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<F>) -> Result<Self, NnError> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(NnError::DimMismatch {
                expected: len,
                found: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row count of a matrix (first dimension).
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Column count of a matrix; 1 for vectors.
    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1..].iter().product()
        } else {
            1
        }
    }

    pub fn row(&self, i: usize) -> &[F] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = F::zero());
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|&v| G::from_f64(v.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: F, other: &Tensor<F>) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: F) {
        self.data.iter_mut().for_each(|v| *v = *v * alpha);
    }
}

/// `out += m · x` for an `r × c` matrix.
pub fn matvec_add<F: Real>(m: &Tensor<F>, x: &[F], out: &mut [F]) {
    let c = m.cols();
    debug_assert_eq!(x.len(), c);
    debug_assert_eq!(out.len(), m.rows());
    for (o, row) in out.iter_mut().zip(m.data.chunks_exact(c)) {
        let mut acc = F::zero();
        for (&w, &xi) in row.iter().zip(x) {
            acc = acc + w * xi;
        }
        *o = *o + acc;
    }
}

/// `out += mᵀ · y`.
pub fn matvec_t_add<F: Real>(m: &Tensor<F>, y: &[F], out: &mut [F]) {
    let c = m.cols();
    debug_assert_eq!(y.len(), m.rows());
    debug_assert_eq!(out.len(), c);
    for (&yi, row) in y.iter().zip(m.data.chunks_exact(c)) {
        if yi == F::zero() {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(row) {
            *o = *o + w * yi;
        }
    }
}

/// `m += y · xᵀ`.
pub fn outer_add<F: Real>(m: &mut Tensor<F>, y: &[F], x: &[F]) {
    let c = m.cols();
    debug_assert_eq!(x.len(), c);
    for (&yi, row) in y.iter().zip(m.data.chunks_exact_mut(c)) {
        if yi == F::zero() {
            continue;
        }
        for (w, &xi) in row.iter_mut().zip(x) {
            *w = *w + yi * xi;
        }
    }
}

pub fn add_assign<F: Real>(a: &mut [F], b: &[F]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x = *x + y;
    }
}

pub fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Anything made of trainable tensors, visited in a fixed order.
pub trait Parameters<F: Real> {
    fn tensors(&self) -> Vec<&Tensor<F>>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>>;

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Flattened copy of every parameter value.
    fn flatten(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for t in self.tensors() {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Overwrites parameters from a flat vector produced by [`Parameters::flatten`].
    fn assign_flat(&mut self, flat: &[F]) -> Result<(), NnError> {
        let n = self.num_parameters();
        if flat.len() != n {
            return Err(NnError::DimMismatch {
                expected: n,
                found: flat.len(),
            });
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let len = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    fn zero_all(&mut self) {
        for t in self.tensors_mut() {
            t.fill_zero();
        }
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree() {
        let m = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = vec![0.0; 2];
        matvec_add(&m, &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, vec![-2.0, -2.0]);
        let mut back = vec![0.0; 3];
        matvec_t_add(&m, &[1.0, 1.0], &mut back);
        assert_eq!(back, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Tensor::<f32>::from_vec(&[2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-1000.0f64).is_finite());
        assert!((sigmoid(1000.0f32) - 1.0).abs() < 1e-6);
    }
}
