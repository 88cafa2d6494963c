//! Scoring models with hand-written reverse-mode gradients.
//!
//! A scorer maps a feature vector to `m - 1` head scores. Parameters are a
//! list of flat tensors (weights row-major `[out, in]`, then biases), which
//! is also the checkpoint layout.

mod checkpoint;
mod linear;
mod mlp;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC,
};
pub use linear::LinearScorer;
pub use mlp::{Dense, MlpScorer};

use serde::{Deserialize, Serialize};

use crate::reduction::aggregate_scores;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Mlp,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

/// Architecture choice; `hidden` only matters for the MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

impl ModelSpec {
    pub fn linear() -> Self {
        ModelSpec {
            kind: ModelKind::Linear,
            hidden: default_hidden(),
        }
    }

    pub fn mlp(hidden: Vec<usize>) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp,
            hidden,
        }
    }

    pub fn build(&self, input_dim: usize, heads: usize, seed: u64) -> Result<Model> {
        Ok(match self.kind {
            ModelKind::Linear => Model::Linear(LinearScorer::init(input_dim, heads, seed)?),
            ModelKind::Mlp => Model::Mlp(MlpScorer::init(input_dim, &self.hidden, heads, seed)?),
        })
    }
}

pub trait Scorer: Clone + Send + Sync {
    fn kind(&self) -> ModelKind;
    fn input_dim(&self) -> usize;
    fn n_heads(&self) -> usize;
    fn shapes(&self) -> Vec<Vec<usize>>;
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Adds the gradient of `sum_k upstream[k] * head_k(x)` to `grads` and
    /// bumps its count.
    fn accumulate_backward(
        &self,
        x: &[f64],
        upstream: &[f64],
        grads: &mut GradientBuffer,
    ) -> Result<()>;

    fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<GradientBuffer> {
        let mut g = self.zero_grads();
        self.accumulate_backward(x, upstream, &mut g)?;
        Ok(g)
    }

    fn zero_grads(&self) -> GradientBuffer {
        GradientBuffer::zeros(&self.shapes())
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Mean of the heads: the final ranking score.
    fn aggregate(&self, x: &[f64]) -> Result<f64> {
        aggregate_scores(&self.forward(x)?)
    }

    fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Gradient sums shaped like a model's tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer {
    tensors: Vec<Vec<f64>>,
    count: usize,
}

impl GradientBuffer {
    pub fn zeros(shapes: &[Vec<usize>]) -> Self {
        GradientBuffer {
            tensors: shapes
                .iter()
                .map(|s| vec![0.0; s.iter().product()])
                .collect(),
            count: 0,
        }
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.tensors
    }

    /// Number of accumulated backward passes. Optimizer steps use the mean.
    pub fn count(&self) -> usize {
        self.count
    }

    pub(crate) fn bump(&mut self) {
        self.count += 1;
    }

    /// Declares the buffer an already-normalized total, so steps apply it as is.
    pub fn mark_as_total(&mut self) {
        self.count = 1;
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        self.count = 0;
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flatten().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Momentum SGD with L2 weight decay:
/// `v = momentum * v + (g + wd * w)`, `w -= lr * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    lr: f64,
    momentum: f64,
    weight_decay: f64,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {lr} must be > 0"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidParameter(format!(
                "momentum {momentum} outside [0, 1)"
            )));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight decay {weight_decay} must be >= 0"
            )));
        }
        Ok(Sgd {
            lr,
            momentum,
            weight_decay,
            velocity: Vec::new(),
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step<M: Scorer>(&mut self, model: &mut M, grads: &GradientBuffer) -> Result<()> {
        for (i, g) in grads.tensors.iter().enumerate() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { tensor: i });
            }
        }
        let scale = 1.0 / grads.count.max(1) as f64;
        if self.velocity.is_empty() {
            self.velocity = grads.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
        }
        for ((w, g), v) in model
            .tensors_mut()
            .into_iter()
            .zip(&grads.tensors)
            .zip(&mut self.velocity)
        {
            if w.len() != g.len() {
                return Err(Error::DimensionMismatch {
                    expected: w.len(),
                    found: g.len(),
                });
            }
            for ((wi, gi), vi) in w.iter_mut().zip(g).zip(v.iter_mut()) {
                let d = gi * scale + self.weight_decay * *wi;
                *vi = self.momentum * *vi + d;
                *wi -= self.lr * *vi;
            }
        }
        Ok(())
    }
}

/// One plain step without carried momentum state.
pub fn sgd_step<M: Scorer>(
    model: &mut M,
    grads: &GradientBuffer,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    Sgd::new(lr, 0.0, weight_decay)?.step(model, grads)
}

/// Either model type, for checkpoints and config-driven construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearScorer),
    Mlp(MlpScorer),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Linear($m) => $e,
            Model::Mlp($m) => $e,
        }
    };
}

impl Scorer for Model {
    fn kind(&self) -> ModelKind {
        dispatch!(self, m => m.kind())
    }
    fn input_dim(&self) -> usize {
        dispatch!(self, m => m.input_dim())
    }
    fn n_heads(&self) -> usize {
        dispatch!(self, m => m.n_heads())
    }
    fn shapes(&self) -> Vec<Vec<usize>> {
        dispatch!(self, m => m.shapes())
    }
    fn tensors(&self) -> Vec<&[f64]> {
        dispatch!(self, m => m.tensors())
    }
    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        dispatch!(self, m => m.tensors_mut())
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        dispatch!(self, m => m.forward(x))
    }
    fn accumulate_backward(
        &self,
        x: &[f64],
        upstream: &[f64],
        grads: &mut GradientBuffer,
    ) -> Result<()> {
        dispatch!(self, m => m.accumulate_backward(x, upstream, grads))
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_grads(grads: &GradientBuffer, shapes: &[Vec<usize>]) -> Result<()> {
    if grads.tensors.len() != shapes.len() {
        return Err(Error::DimensionMismatch {
            expected: shapes.len(),
            found: grads.tensors.len(),
        });
    }
    for (t, s) in grads.tensors.iter().zip(shapes) {
        check_dim(s.iter().product(), t.len())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_step() {
        let mut m = LinearScorer::from_parts(1, vec![1.0], vec![0.0]).unwrap();
        let mut g = m.zero_grads();
        g.tensors_mut()[0][0] = 0.5;
        g.mark_as_total();
        sgd_step(&mut m, &g, 0.1, 0.0).unwrap();
        assert!((m.weights()[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_only() {
        let mut m = LinearScorer::from_parts(1, vec![1.0], vec![0.0]).unwrap();
        let g = m.zero_grads();
        sgd_step(&mut m, &g, 0.1, 0.1).unwrap();
        assert!((m.weights()[0] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn step_averages_over_count() {
        let mut m = LinearScorer::from_parts(1, vec![0.0], vec![0.0]).unwrap();
        let mut g = m.zero_grads();
        m.accumulate_backward(&[1.0], &[1.0], &mut g).unwrap();
        m.accumulate_backward(&[3.0], &[1.0], &mut g).unwrap();
        assert_eq!(g.count(), 2);
        sgd_step(&mut m, &g, 1.0, 0.0).unwrap();
        assert_eq!(m.weights()[0], -2.0);
        assert_eq!(m.bias()[0], -1.0);
    }

    #[test]
    fn momentum_accumulates() {
        let mut m = LinearScorer::from_parts(1, vec![0.0], vec![0.0]).unwrap();
        let mut g = m.zero_grads();
        g.tensors_mut()[0][0] = 1.0;
        g.mark_as_total();
        let mut opt = Sgd::new(0.1, 0.5, 0.0).unwrap();
        opt.step(&mut m, &g).unwrap();
        opt.step(&mut m, &g).unwrap();
        // -0.1 then -0.15
        assert!((m.weights()[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut m = LinearScorer::from_parts(1, vec![0.0], vec![0.0]).unwrap();
        let mut g = m.zero_grads();
        g.tensors_mut()[1][0] = f64::NAN;
        assert!(matches!(
            sgd_step(&mut m, &g, 0.1, 0.0),
            Err(Error::NonFiniteGradient { tensor: 1 })
        ));
    }

    #[test]
    fn optimizer_validation() {
        assert!(Sgd::new(0.0, 0.0, 0.0).is_err());
        assert!(Sgd::new(0.1, 1.0, 0.0).is_err());
        assert!(Sgd::new(0.1, 0.9, -1.0).is_err());
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let run = || {
            let mut m = ModelSpec::mlp(vec![8, 8]).build(3, 2, 99).unwrap();
            let mut opt = Sgd::new(0.05, 0.9, 1e-3).unwrap();
            for step in 0..10 {
                let x = [step as f64 * 0.1, -0.3, 0.7];
                let g = m.backward(&x, &[1.0, -0.5]).unwrap();
                opt.step(&mut m, &g).unwrap();
            }
            m
        };
        let (a, b) = (run(), run());
        let bits = |m: &Model| {
            m.tensors()
                .iter()
                .flat_map(|t| t.iter().map(|v| v.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}
