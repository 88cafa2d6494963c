use rand::Rng;

use super::{check_dim, check_grads, GradientBuffer, ModelKind, Scorer};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// `g(x) = W x + bias`, one weight row per head.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    d: usize,
    heads: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearScorer {
    pub fn init(d: usize, heads: usize, seed: u64) -> Result<Self> {
        if d == 0 || heads == 0 {
            return Err(Error::InvalidParameter(
                "linear scorer needs d, heads >= 1".into(),
            ));
        }
        let bound = 1.0 / (d as f64).sqrt();
        let mut rng = rng::stream(seed, Stream::Init);
        let weights = (0..heads * d)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        let bias = (0..heads)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Ok(LinearScorer {
            d,
            heads,
            weights,
            bias,
        })
    }

    pub fn zeros(d: usize, heads: usize) -> Self {
        LinearScorer {
            d,
            heads,
            weights: vec![0.0; heads * d],
            bias: vec![0.0; heads],
        }
    }

    /// `weights` is row-major `[heads, d]`.
    pub fn from_parts(d: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        let heads = bias.len();
        if d == 0 || heads == 0 {
            return Err(Error::InvalidParameter(
                "linear scorer needs d, heads >= 1".into(),
            ));
        }
        check_dim(heads * d, weights.len())?;
        Ok(LinearScorer {
            d,
            heads,
            weights,
            bias,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

impl Scorer for LinearScorer {
    fn kind(&self) -> ModelKind {
        ModelKind::Linear
    }

    fn input_dim(&self) -> usize {
        self.d
    }

    fn n_heads(&self) -> usize {
        self.heads
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        vec![vec![self.heads, self.d], vec![self.heads]]
    }

    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.weights, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, &mut self.bias]
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x.len())?;
        Ok(self
            .weights
            .chunks_exact(self.d)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect())
    }

    fn accumulate_backward(
        &self,
        x: &[f64],
        upstream: &[f64],
        grads: &mut GradientBuffer,
    ) -> Result<()> {
        check_dim(self.d, x.len())?;
        check_dim(self.heads, upstream.len())?;
        check_grads(grads, &self.shapes())?;
        let (gw, rest) = grads.tensors.split_at_mut(1);
        for (k, &u) in upstream.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            for (g, xi) in gw[0][k * self.d..(k + 1) * self.d].iter_mut().zip(x) {
                *g += u * xi;
            }
            rest[0][k] += u;
        }
        grads.bump();
        Ok(())
    }
}
