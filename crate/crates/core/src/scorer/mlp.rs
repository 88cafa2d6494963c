use rand::Rng;

use super::{check_dim, check_grads, GradientBuffer, ModelKind, Scorer};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Affine layer, weights row-major `[n_out, n_in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n_in: usize,
    n_out: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Dense {
    fn init(n_in: usize, n_out: usize, rng: &mut rng::Rng) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        Dense {
            n_in,
            n_out,
            w: (0..n_in * n_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect(),
            b: (0..n_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect(),
        }
    }

    pub fn from_parts(n_in: usize, n_out: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_dim(n_in * n_out, w.len())?;
        check_dim(n_out, b.len())?;
        Ok(Dense { n_in, n_out, w, b })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.w
                .chunks_exact(self.n_in)
                .zip(&self.b)
                .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b),
        );
    }
}

/// Shared ReLU trunk followed by one affine map producing all heads.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpScorer {
    trunk: Vec<Dense>,
    head: Dense,
}

impl MlpScorer {
    /// `hidden` lists trunk widths, e.g. `[64, 64]` for `d -> 64 -> 64 -> heads`.
    pub fn init(d: usize, hidden: &[usize], heads: usize, seed: u64) -> Result<Self> {
        if d == 0 || heads == 0 || hidden.contains(&0) {
            return Err(Error::InvalidParameter("MLP widths must be >= 1".into()));
        }
        let mut rng = rng::stream(seed, Stream::Init);
        let mut trunk = Vec::with_capacity(hidden.len());
        let mut n_in = d;
        for &w in hidden {
            trunk.push(Dense::init(n_in, w, &mut rng));
            n_in = w;
        }
        let head = Dense::init(n_in, heads, &mut rng);
        Ok(MlpScorer { trunk, head })
    }

    pub fn from_layers(trunk: Vec<Dense>, head: Dense) -> Result<Self> {
        let mut n_in = trunk.first().map_or(head.n_in, |l| l.n_in);
        for l in trunk.iter().chain(std::iter::once(&head)) {
            check_dim(n_in, l.n_in)?;
            n_in = l.n_out;
        }
        Ok(MlpScorer { trunk, head })
    }

    pub fn trunk(&self) -> &[Dense] {
        &self.trunk
    }

    pub fn head(&self) -> &Dense {
        &self.head
    }

    /// Pre-activations of every trunk layer plus the head output.
    fn trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut pre = Vec::with_capacity(self.trunk.len());
        let mut act = x.to_vec();
        for layer in &self.trunk {
            let mut z = Vec::with_capacity(layer.n_out);
            layer.apply(&act, &mut z);
            act = z.iter().map(|v| v.max(0.0)).collect();
            pre.push(z);
        }
        let mut out = Vec::with_capacity(self.head.n_out);
        self.head.apply(&act, &mut out);
        (pre, out)
    }
}

impl Scorer for MlpScorer {
    fn kind(&self) -> ModelKind {
        ModelKind::Mlp
    }

    fn input_dim(&self) -> usize {
        self.trunk.first().map_or(self.head.n_in, |l| l.n_in)
    }

    fn n_heads(&self) -> usize {
        self.head.n_out
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        self.trunk
            .iter()
            .chain(std::iter::once(&self.head))
            .flat_map(|l| [vec![l.n_out, l.n_in], vec![l.n_out]])
            .collect()
    }

    fn tensors(&self) -> Vec<&[f64]> {
        self.trunk
            .iter()
            .chain(std::iter::once(&self.head))
            .flat_map(|l| [l.w.as_slice(), l.b.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.trunk
            .iter_mut()
            .chain(std::iter::once(&mut self.head))
            .flat_map(|l| [l.w.as_mut_slice(), l.b.as_mut_slice()])
            .collect()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.trace(x).1)
    }

    fn accumulate_backward(
        &self,
        x: &[f64],
        upstream: &[f64],
        grads: &mut GradientBuffer,
    ) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        check_dim(self.n_heads(), upstream.len())?;
        check_grads(grads, &self.shapes())?;
        let (pre, _) = self.trace(x);
        let depth = self.trunk.len();

        // delta flows backwards from the head through each trunk layer
        let mut delta = upstream.to_vec();
        for layer_idx in (0..=depth).rev() {
            let layer = if layer_idx == depth {
                &self.head
            } else {
                &self.trunk[layer_idx]
            };
            let input: Vec<f64> = if layer_idx == 0 {
                x.to_vec()
            } else {
                pre[layer_idx - 1].iter().map(|v| v.max(0.0)).collect()
            };
            let (gw, gb) = {
                let (lo, hi) = grads.tensors.split_at_mut(2 * layer_idx + 1);
                (&mut lo[2 * layer_idx], &mut hi[0])
            };
            for (o, &dl) in delta.iter().enumerate() {
                if dl == 0.0 {
                    continue;
                }
                gb[o] += dl;
                for (g, xi) in gw[o * layer.n_in..(o + 1) * layer.n_in]
                    .iter_mut()
                    .zip(&input)
                {
                    *g += dl * xi;
                }
            }
            if layer_idx == 0 {
                break;
            }
            let mut next = vec![0.0; layer.n_in];
            for (o, &dl) in delta.iter().enumerate() {
                if dl == 0.0 {
                    continue;
                }
                for (n, w) in next
                    .iter_mut()
                    .zip(&layer.w[o * layer.n_in..(o + 1) * layer.n_in])
                {
                    *n += dl * w;
                }
            }
            for (n, z) in next.iter_mut().zip(&pre[layer_idx - 1]) {
                if *z <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
        }
        grads.bump();
        Ok(())
    }
}
