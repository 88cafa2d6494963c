//! Bags to multi-label AUC.
//!
//! Label `k` (1-based, `k < m`) splits the bags at rank `k`: bags `1..=k` are
//! its pseudo-positives and bags `k+1..=m` its pseudo-negatives. Its pairwise
//! risk over the two unions expands into bag-pair risks weighted by
//!
//! ```text
//! r_ijk = n_i n_j / (sum_{i<=k} n_i * sum_{j>k} n_j),   i <= k < j
//! ```
//!
//! so every label is a weighted multi-bag AUC problem, and a shared scorer
//! over all labels carries weights `z_ij = sum_{k=i}^{j-1} r_ijk / (m - 1)`.

use serde::{Deserialize, Serialize};

use crate::aucmetrics::{empirical_u2_risk, PairWeight, SurrogateLoss};
use crate::{Error, Result};

/// `m - 1` surrogate bits for one bag: `(id - 1)` zeros, then ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurrogateLabelVector {
    bits: Vec<bool>,
}

impl SurrogateLabelVector {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bit for label `k` (1-based).
    pub fn get(&self, k: usize) -> bool {
        self.bits[k - 1]
    }

    pub fn to_vec_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| b as u8).collect()
    }
}

pub fn surrogate_labels(bag_id: usize, m: usize) -> Result<SurrogateLabelVector> {
    if m < 2 {
        return Err(Error::TooFewBags(m));
    }
    if bag_id == 0 || bag_id > m {
        return Err(Error::BagIdOutOfRange { id: bag_id, m });
    }
    Ok(SurrogateLabelVector {
        bits: (1..m).map(|k| bag_id <= k).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionPlan {
    sizes: Vec<usize>,
    // prefix[k] = n_1 + ... + n_k
    prefix: Vec<usize>,
    p: Vec<f64>,
}

/// JSON debug dump of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDump {
    pub m: usize,
    pub sizes: Vec<usize>,
    pub p: Vec<f64>,
    pub z_pairs: Vec<PairWeight>,
}

pub fn build_plan(sizes: &[usize]) -> Result<ReductionPlan> {
    if sizes.len() < 2 {
        return Err(Error::TooFewBags(sizes.len()));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter("bag sizes must be >= 1".into()));
    }
    let mut prefix = Vec::with_capacity(sizes.len() + 1);
    prefix.push(0);
    for &n in sizes {
        prefix.push(prefix.last().unwrap() + n);
    }
    let total = *prefix.last().unwrap() as f64;
    let p = (1..sizes.len()).map(|k| prefix[k] as f64 / total).collect();
    Ok(ReductionPlan {
        sizes: sizes.to_vec(),
        prefix,
        p,
    })
}

impl ReductionPlan {
    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.prefix[self.m()]
    }

    /// Mixing fractions `p_1..p_{m-1}`.
    pub fn mixing_fractions(&self) -> &[f64] {
        &self.p
    }

    /// `p_k`, the share of the pooled sample in bags `1..=k`.
    pub fn p(&self, k: usize) -> f64 {
        self.p[k - 1]
    }

    /// Sizes of the pseudo-positive and pseudo-negative unions of label `k`.
    pub fn split_sizes(&self, k: usize) -> (usize, usize) {
        (self.prefix[k], self.total() - self.prefix[k])
    }

    /// `r_ijk`; zero unless `i <= k < j`.
    pub fn r(&self, i: usize, j: usize, k: usize) -> f64 {
        if !(1 <= i && i <= k && k < j && j <= self.m()) {
            return 0.0;
        }
        let (pos, neg) = self.split_sizes(k);
        (self.sizes[i - 1] * self.sizes[j - 1]) as f64 / (pos as f64 * neg as f64)
    }

    /// Weight a single shared scorer puts on the bag pair `(i, j)`.
    pub fn z(&self, i: usize, j: usize) -> f64 {
        let m = self.m();
        (i..j).map(|k| self.r(i, j, k)).sum::<f64>() / (m - 1) as f64
    }

    pub fn pair_weights(&self) -> Vec<PairWeight> {
        let m = self.m();
        let mut out = Vec::with_capacity(m * (m - 1) / 2);
        for i in 1..m {
            for j in i + 1..=m {
                out.push(PairWeight {
                    i,
                    j,
                    z: self.z(i, j),
                });
            }
        }
        out
    }

    /// Weights of label `k` alone, `r_ijk / (m - 1)`.
    pub fn label_pair_weights(&self, k: usize) -> Vec<PairWeight> {
        let m = self.m();
        let mut out = Vec::new();
        for i in 1..=k {
            for j in k + 1..=m {
                out.push(PairWeight {
                    i,
                    j,
                    z: self.r(i, j, k) / (m - 1) as f64,
                });
            }
        }
        out
    }

    pub fn dump(&self) -> PlanDump {
        PlanDump {
            m: self.m(),
            sizes: self.sizes.clone(),
            p: self.p.clone(),
            z_pairs: self.pair_weights(),
        }
    }
}

/// Final ranking score: the mean of the `m - 1` head outputs.
pub fn aggregate_scores(head_scores: &[f64]) -> Result<f64> {
    if head_scores.is_empty() {
        return Err(Error::Empty("no head scores to aggregate"));
    }
    Ok(head_scores.iter().sum::<f64>() / head_scores.len() as f64)
}

/// Risk of label `k` over the pseudo-positive and pseudo-negative unions,
/// scaled by `1 / (m - 1)`. `bag_scores[i]` holds head `k`'s scores on bag `i + 1`.
pub fn per_label_risk(bag_scores: &[Vec<f64>], k: usize, loss: SurrogateLoss) -> Result<f64> {
    let m = bag_scores.len();
    if m < 2 {
        return Err(Error::TooFewBags(m));
    }
    if k == 0 || k >= m {
        return Err(Error::InvalidParameter(format!("label {k} outside 1..{m}")));
    }
    let pos: Vec<f64> = bag_scores[..k].iter().flatten().copied().collect();
    let neg: Vec<f64> = bag_scores[k..].iter().flatten().copied().collect();
    Ok(empirical_u2_risk(&pos, &neg, loss)? / (m - 1) as f64)
}

/// The same risk written as `(1 / (m - 1)) * sum_{i<=k<j} r_ijk * U_ij`.
pub fn expanded_label_risk(
    plan: &ReductionPlan,
    bag_scores: &[Vec<f64>],
    k: usize,
    loss: SurrogateLoss,
) -> Result<f64> {
    let m = plan.m();
    if bag_scores.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: bag_scores.len(),
        });
    }
    let mut total = 0.0;
    for i in 1..=k {
        for j in k + 1..=m {
            total +=
                plan.r(i, j, k) * empirical_u2_risk(&bag_scores[i - 1], &bag_scores[j - 1], loss)?;
        }
    }
    Ok(total / (m - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aucmetrics::empirical_um_risk;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn surrogate_label_examples() {
        assert_eq!(surrogate_labels(2, 4).unwrap().to_vec_u8(), vec![0, 1, 1]);
        assert_eq!(surrogate_labels(1, 4).unwrap().to_vec_u8(), vec![1, 1, 1]);
        assert_eq!(surrogate_labels(4, 4).unwrap().to_vec_u8(), vec![0, 0, 0]);
        assert!(matches!(
            surrogate_labels(5, 4),
            Err(Error::BagIdOutOfRange { id: 5, m: 4 })
        ));
        assert!(surrogate_labels(0, 4).is_err());
    }

    #[test]
    fn plan_three_equal_bags() {
        let plan = build_plan(&[10, 10, 10]).unwrap();
        assert_eq!(plan.r(1, 2, 1), 0.5);
        assert_eq!(plan.r(1, 3, 1), 0.5);
        assert_eq!(plan.r(2, 3, 1), 0.0);
    }

    #[test]
    fn plan_two_bags() {
        let plan = build_plan(&[10, 10]).unwrap();
        assert_eq!(plan.p(1), 0.5);
        assert_eq!(plan.z(1, 2), 1.0);
    }

    #[test]
    fn equal_sizes_simplify() {
        for m in 2..12 {
            let plan = build_plan(&vec![7; m]).unwrap();
            for k in 1..m {
                let expect = 1.0 / (k * (m - k)) as f64;
                for i in 1..=k {
                    for j in k + 1..=m {
                        assert!((plan.r(i, j, k) - expect).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn plan_errors() {
        assert!(matches!(build_plan(&[5]), Err(Error::TooFewBags(1))));
        assert!(build_plan(&[5, 0]).is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert!((aggregate_scores(&[0.2, 0.4, 0.6]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(aggregate_scores(&[0.7]).unwrap(), 0.7);
        assert_eq!(aggregate_scores(&[1.25; 6]).unwrap(), 1.25);
        assert!(aggregate_scores(&[]).is_err());
    }

    #[test]
    fn label_risk_expansion_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &m in &[2usize, 3, 5, 10] {
            let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(1..12)).collect();
            let plan = build_plan(&sizes).unwrap();
            let scores: Vec<Vec<f64>> = sizes
                .iter()
                .map(|&n| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            for k in 1..m {
                for loss in [SurrogateLoss::Square, SurrogateLoss::ZeroOne] {
                    let direct = per_label_risk(&scores, k, loss).unwrap();
                    let expanded = expanded_label_risk(&plan, &scores, k, loss).unwrap();
                    assert!((direct - expanded).abs() <= 1e-10, "m={m} k={k}");
                }
            }
        }
    }

    #[test]
    fn shared_scorer_objective_equals_um_risk_with_implied_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sizes = [6usize, 9, 4];
        let plan = build_plan(&sizes).unwrap();
        let scores: Vec<Vec<f64>> = sizes
            .iter()
            .map(|&n| (0..n).map(|_| rng.random::<f64>()).collect())
            .collect();
        let multi_label: f64 = (1..3)
            .map(|k| per_label_risk(&scores, k, SurrogateLoss::Square).unwrap())
            .sum();
        let um = empirical_um_risk(&scores, &plan.pair_weights(), SurrogateLoss::Square).unwrap();
        assert!((multi_label - um).abs() <= 1e-10);
    }

    #[test]
    fn dump_has_expected_keys() {
        let json = serde_json::to_value(build_plan(&[3, 4, 5]).unwrap().dump()).unwrap();
        for key in ["m", "sizes", "p", "z_pairs"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["z_pairs"].as_array().unwrap().len(), 3);
    }

    proptest! {
        #[test]
        fn surrogate_vectors_are_monotone_and_recover_bags(m in 2usize..40, id_seed: usize) {
            let id = id_seed % m + 1;
            let v = surrogate_labels(id, m).unwrap();
            prop_assert!(v.bits().windows(2).all(|w| w[0] <= w[1]));
            // the first set bit marks the bag boundary
            let recovered = v.bits().iter().position(|&b| b).map(|k| k + 1).unwrap_or(m);
            prop_assert_eq!(recovered, id);
        }

        #[test]
        fn plan_fractions_increase(sizes in proptest::collection::vec(1usize..50, 2..20)) {
            let plan = build_plan(&sizes).unwrap();
            prop_assert!(plan.mixing_fractions().windows(2).all(|w| w[0] < w[1]));
            for w in plan.pair_weights() {
                prop_assert!(w.z > 0.0);
            }
        }

        #[test]
        fn aggregate_commutes_with_affine(heads in proptest::collection::vec(-10.0f64..10.0, 1..20), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mapped: Vec<f64> = heads.iter().map(|h| a * h + b).collect();
            let lhs = aggregate_scores(&mapped).unwrap();
            let rhs = a * aggregate_scores(&heads).unwrap() + b;
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
    }
}
