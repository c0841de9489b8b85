use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureConstruction;
use super::EvalError;
use crate::nn::tensor::{matvec_add, matvec_t_add, outer_add, sigmoid};
use crate::nn::{init_matrix, softmax_xent, AdamConfig, AdamState, Parameters, Tensor};
use crate::synth::{derive_rng, TaskKind};

/// Sigmoid hidden layer between the features and the softmax.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenLayer {
    pub width: usize,
}

impl HiddenLayer {
    /// Desk-scale width for a feature dim: `min(2000, 4·feature_dim)`.
    pub fn scaled(feature_dim: usize) -> Self {
        HiddenLayer {
            width: (4 * feature_dim).min(2000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub task: String,
    pub construction: FeatureConstruction,
    pub classes: usize,
    pub hidden: Option<HiddenLayer>,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub l2_grid: Vec<f64>,
    pub seed: u64,
}

impl ProbeSpec {
    pub const DEFAULT_L2_GRID: [f64; 4] = [0.0, 1e-4, 1e-3, 1e-2];

    /// Logistic regression with the default optimizer settings.
    pub fn linear(task: &str, construction: FeatureConstruction, classes: usize, seed: u64) -> Self {
        ProbeSpec {
            task: task.to_string(),
            construction,
            classes,
            hidden: None,
            lr: 1e-3,
            batch_size: 64,
            max_epochs: 100,
            patience: 5,
            l2_grid: Self::DEFAULT_L2_GRID.to_vec(),
            seed,
        }
    }

    /// Default probe of a task: DC gets a sigmoid hidden layer, the rest are
    /// linear.
    pub fn for_task(task: TaskKind, classes: usize, embedding_dim: usize, seed: u64) -> Self {
        let construction = FeatureConstruction::for_task(task);
        let mut spec = Self::linear(task.name(), construction, classes, seed);
        if task == TaskKind::Dc {
            spec.hidden = Some(HiddenLayer::scaled(construction.multiple() * embedding_dim));
        }
        spec
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidSpec(m.to_string()));
        if self.classes < 2 {
            return bad("at least two classes required");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch size, epochs and patience must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.l2_grid.is_empty() || self.l2_grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad("L2 grid must be a non-empty list of non-negative values");
        }
        if self.hidden.is_some_and(|h| h.width == 0) {
            return bad("hidden width must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledFeatures {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl LabeledFeatures {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Softmax classifier, optionally behind one sigmoid hidden layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    /// `(weights [width × in], bias [width])`
    pub hidden: Option<(Tensor<f64>, Tensor<f64>)>,
    pub w_out: Tensor<f64>,
    pub b_out: Tensor<f64>,
}

impl Parameters<f64> for Probe {
    fn tensors(&self) -> Vec<&Tensor<f64>> {
        let mut v = Vec::with_capacity(4);
        if let Some((w, b)) = &self.hidden {
            v.push(w);
            v.push(b);
        }
        v.push(&self.w_out);
        v.push(&self.b_out);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<f64>> {
        let mut v = Vec::with_capacity(4);
        if let Some((w, b)) = &mut self.hidden {
            v.push(w);
            v.push(b);
        }
        v.push(&mut self.w_out);
        v.push(&mut self.b_out);
        v
    }
}

struct Forward {
    hidden: Option<Vec<f64>>,
    logits: Vec<f64>,
}

impl Probe {
    pub fn zeros(input_dim: usize, hidden: Option<HiddenLayer>, classes: usize) -> Self {
        let top = hidden.map_or(input_dim, |h| h.width);
        Probe {
            hidden: hidden.map(|h| (Tensor::zeros(&[h.width, input_dim]), Tensor::zeros(&[h.width]))),
            w_out: Tensor::zeros(&[classes, top]),
            b_out: Tensor::zeros(&[classes]),
        }
    }

    pub fn random<R: Rng>(input_dim: usize, hidden: Option<HiddenLayer>, classes: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden, classes);
        if let Some((w, _)) = &mut p.hidden {
            init_matrix(w, rng);
        }
        init_matrix(&mut p.w_out, rng);
        p
    }

    pub fn input_dim(&self) -> usize {
        match &self.hidden {
            Some((w, _)) => w.cols(),
            None => self.w_out.cols(),
        }
    }

    pub fn classes(&self) -> usize {
        self.w_out.rows()
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let hidden = self.hidden.as_ref().map(|(w, b)| {
            let mut h = b.data().to_vec();
            matvec_add(w, x, &mut h);
            h.iter_mut().for_each(|v| *v = sigmoid(*v));
            h
        });
        let mut logits = self.b_out.data().to_vec();
        matvec_add(&self.w_out, hidden.as_deref().unwrap_or(x), &mut logits);
        Forward { hidden, logits }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).logits
    }

    /// Argmax class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (k, &v) in logits.iter().enumerate().skip(1) {
            if v > logits[best] {
                best = k;
            }
        }
        best
    }

    /// Adds the gradient of one example's cross-entropy to `grads`.
    fn accumulate(&self, x: &[f64], label: usize, grads: &mut Probe) -> Result<f64, EvalError> {
        let fwd = self.forward(x);
        let (loss, d_logits) = softmax_xent(&fwd.logits, label)?;
        let top = fwd.hidden.as_deref().unwrap_or(x);
        outer_add(&mut grads.w_out, &d_logits, top);
        grads
            .b_out
            .data_mut()
            .iter_mut()
            .zip(&d_logits)
            .for_each(|(g, d)| *g += d);
        if let (Some(h), Some((gw, gb))) = (&fwd.hidden, &mut grads.hidden) {
            let mut d_h = vec![0.0; h.len()];
            matvec_t_add(&self.w_out, &d_logits, &mut d_h);
            for (d, &a) in d_h.iter_mut().zip(h) {
                *d *= a * (1.0 - a);
            }
            outer_add(gw, &d_h, x);
            gb.data_mut().iter_mut().zip(&d_h).for_each(|(g, d)| *g += d);
        }
        Ok(loss)
    }

    fn weight_tensors(&self) -> Vec<&Tensor<f64>> {
        let mut v = vec![&self.w_out];
        if let Some((w, _)) = &self.hidden {
            v.push(w);
        }
        v
    }
}

fn check_data(data: &LabeledFeatures, input_dim: usize, classes: usize) -> Result<(), EvalError> {
    if data.x.len() != data.y.len() {
        return Err(EvalError::InvalidSpec(format!(
            "{} feature rows but {} labels",
            data.x.len(),
            data.y.len()
        )));
    }
    for (x, &y) in data.x.iter().zip(&data.y) {
        if x.len() != input_dim {
            return Err(EvalError::DimMismatch {
                expected: input_dim,
                found: x.len(),
            });
        }
        if y >= classes {
            return Err(EvalError::LabelOutOfRange { label: y, classes });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::InvalidSpec("non-finite feature value".into()));
        }
    }
    Ok(())
}

/// Mean cross-entropy over `data` plus `l2/2 · ‖W‖²` on the weight matrices
/// (biases are not penalized), with its gradient.
pub fn probe_loss(probe: &Probe, data: &LabeledFeatures, l2: f64) -> Result<(f64, Probe), EvalError> {
    let mut grads = probe.clone();
    grads.zero_all();
    let mut loss = 0.0;
    for (x, &y) in data.x.iter().zip(&data.y) {
        loss += probe.accumulate(x, y, &mut grads)?;
    }
    let n = data.len().max(1) as f64;
    loss /= n;
    grads.tensors_mut().into_iter().for_each(|t| t.scale(1.0 / n));
    if l2 > 0.0 {
        for w in probe.weight_tensors() {
            loss += 0.5 * l2 * w.data().iter().map(|v| v * v).sum::<f64>();
        }
        grads.w_out.axpy(l2, &probe.w_out);
        if let (Some((gw, _)), Some((w, _))) = (&mut grads.hidden, &probe.hidden) {
            gw.axpy(l2, w);
        }
    }
    Ok((loss, grads))
}

fn accuracy(probe: &Probe, data: &LabeledFeatures) -> f64 {
    let correct = data.x.iter().zip(&data.y).filter(|(x, &y)| probe.predict(x) == y).count();
    correct as f64 / data.len() as f64
}

/// Exact-match accuracy on a test set.
pub fn evaluate_probe(probe: &Probe, test: &LabeledFeatures) -> Result<f64, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    check_data(test, probe.input_dim(), probe.classes())?;
    Ok(accuracy(probe, test))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedProbe {
    pub probe: Probe,
    pub l2: f64,
    pub dev_accuracy: f64,
}

fn train_one(
    train: &LabeledFeatures,
    dev: &LabeledFeatures,
    spec: &ProbeSpec,
    l2_index: usize,
) -> Result<(Probe, f64), EvalError> {
    let l2 = spec.l2_grid[l2_index];
    let mut rng = derive_rng(spec.seed, &["probe", &spec.task, &l2_index.to_string()]);
    let input_dim = train.x[0].len();
    let mut probe = Probe::random(input_dim, spec.hidden, spec.classes, &mut rng);
    let mut adam = AdamState::new(
        &probe,
        AdamConfig {
            lr: spec.lr,
            ..AdamConfig::default()
        },
    );
    // without a dev set, selection falls back to training accuracy
    let select = if dev.is_empty() { train } else { dev };
    let mut best = (probe.clone(), accuracy(&probe, select));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stale = 0;
    for _ in 0..spec.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(spec.batch_size) {
            let batch = LabeledFeatures {
                x: chunk.iter().map(|&i| train.x[i].clone()).collect(),
                y: chunk.iter().map(|&i| train.y[i]).collect(),
            };
            let (_, grads) = probe_loss(&probe, &batch, l2)?;
            adam.update(&mut probe, &grads)?;
        }
        let acc = accuracy(&probe, select);
        if acc > best.1 {
            best = (probe.clone(), acc);
            stale = 0;
        } else {
            stale += 1;
            if stale >= spec.patience {
                break;
            }
        }
    }
    Ok(best)
}

/// Trains one probe per L2 value and keeps the one with the best dev
/// accuracy (earliest grid entry on ties). Each run keeps its best epoch.
pub fn train_probe(train: &LabeledFeatures, dev: &LabeledFeatures, spec: &ProbeSpec) -> Result<TrainedProbe, EvalError> {
    spec.validate()?;
    if train.is_empty() {
        return Err(EvalError::InvalidSpec("empty training set".into()));
    }
    let input_dim = train.x[0].len();
    check_data(train, input_dim, spec.classes)?;
    check_data(dev, input_dim, spec.classes)?;
    if train.y.iter().all(|&y| y == train.y[0]) {
        return Err(EvalError::DegenerateLabels);
    }
    let mut best: Option<TrainedProbe> = None;
    for i in 0..spec.l2_grid.len() {
        let (probe, dev_accuracy) = train_one(train, dev, spec, i)?;
        if best.as_ref().is_none_or(|b| dev_accuracy > b.dev_accuracy) {
            best = Some(TrainedProbe {
                probe,
                l2: spec.l2_grid[i],
                dev_accuracy,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}
