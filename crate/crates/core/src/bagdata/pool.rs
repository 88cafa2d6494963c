use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{Instance, Label};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Two isotropic Gaussian classes with a shared standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianPoolSpec {
    pub d: usize,
    pub mean_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub sigma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub positive_fraction: f64,
}

impl Default for GaussianPoolSpec {
    /// Means `(1, 1)` and `(-1, -1)` with unit noise: Bayes AUC is `Phi(2)`.
    fn default() -> Self {
        GaussianPoolSpec {
            d: 2,
            mean_pos: vec![1.0, 1.0],
            mean_neg: vec![-1.0, -1.0],
            sigma: 1.0,
            n_train: 4000,
            n_test: 1000,
            positive_fraction: 0.5,
        }
    }
}

/// Labeled train pool plus a held-out test split that never enters bags.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPool {
    pub train: Vec<Instance>,
    pub test: Vec<Instance>,
}

impl GaussianPoolSpec {
    /// Same class geometry with a different train/test size. The test split
    /// is a quarter of the train split (20% of the pool).
    pub fn with_train_size(&self, n_train: usize) -> Self {
        GaussianPoolSpec {
            n_train,
            n_test: (n_train / 4).max(1),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.mean_pos.len() != self.d || self.mean_neg.len() != self.d {
            return Err(Error::InvalidParameter(format!(
                "pool means must both have dimension d = {}",
                self.d
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::InvalidParameter(
                "positive_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.n_train < 2 {
            return Err(Error::InvalidParameter("n_train must be >= 2".into()));
        }
        Ok(())
    }

    /// Best achievable AUC: `Phi(|mean_pos - mean_neg| / (sigma * sqrt 2))`.
    pub fn bayes_auc(&self) -> f64 {
        let dist: f64 = self
            .mean_pos
            .iter()
            .zip(&self.mean_neg)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        std_normal_cdf(dist / (self.sigma * std::f64::consts::SQRT_2))
    }

    /// Generates exactly `n_train` + `n_test` instances. Each split holds
    /// `round(positive_fraction * n)` positives (at least one of each class).
    pub fn generate(&self, rng_seed: u64) -> Result<LabeledPool> {
        self.validate()?;
        let noise =
            Normal::new(0.0, self.sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = rng::stream(rng_seed, Stream::Pool);
        let mut split = |n: usize| -> Vec<Instance> {
            let n_pos = ((self.positive_fraction * n as f64).round() as usize)
                .clamp(1, n.saturating_sub(1).max(1));
            (0..n)
                .map(|i| {
                    let (mean, label) = if i < n_pos {
                        (&self.mean_pos, Label::Positive)
                    } else {
                        (&self.mean_neg, Label::Negative)
                    };
                    let x = mean.iter().map(|mu| mu + noise.sample(&mut rng)).collect();
                    Instance::labeled(x, label)
                })
                .collect()
        };
        let train = split(self.n_train);
        let test = if self.n_test > 0 {
            split(self.n_test)
        } else {
            Vec::new()
        };
        Ok(LabeledPool { train, test })
    }
}

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bagdata::LabelGate;

    #[test]
    fn default_bayes_auc_is_phi_two() {
        let auc = GaussianPoolSpec::default().bayes_auc();
        assert!((auc - 0.977_249_868_051_820_8).abs() < 1e-10, "{auc}");
    }

    #[test]
    fn exact_counts() {
        let spec = GaussianPoolSpec {
            n_train: 101,
            n_test: 33,
            ..Default::default()
        };
        let pool = spec.generate(1).unwrap();
        assert_eq!(pool.train.len(), 101);
        assert_eq!(pool.test.len(), 33);
        let gate = LabelGate::evaluation();
        let pos = pool
            .train
            .iter()
            .filter(|i| i.hidden_label(&gate) == Some(Label::Positive))
            .count();
        assert_eq!(pos, 51);
    }

    #[test]
    fn rejects_mismatched_means() {
        let spec = GaussianPoolSpec {
            d: 3,
            ..Default::default()
        };
        assert!(spec.generate(0).is_err());
    }
}
