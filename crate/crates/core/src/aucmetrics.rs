//! Exact AUC and the pairwise empirical AUC risks.
//!
//! Two tie conventions coexist on purpose. [`auc_exact`] credits a tied
//! positive/negative pair with 0.5, the usual metric convention. The risk
//! functions use the zero-one loss `l01(z) = 1 if z < 0 else 0`, so a tie
//! costs nothing there.

use serde::{Deserialize, Serialize};

use crate::bagdata::Label;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub label: Label,
}

impl ScoredSample {
    pub fn new(score: f64, label: Label) -> Self {
        ScoredSample { score, label }
    }
}

/// Pairwise surrogate evaluated at `z = f(x) - f(x')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateLoss {
    ZeroOne,
    /// `(1 - z)^2`.
    Square,
    /// `(margin - z)^2`.
    MarginSquare {
        margin: f64,
    },
}

impl SurrogateLoss {
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            SurrogateLoss::ZeroOne => {
                if z < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SurrogateLoss::Square => (1.0 - z) * (1.0 - z),
            SurrogateLoss::MarginSquare { margin } => (margin - z) * (margin - z),
        }
    }
}

/// Weight `z` on the bag pair `(i, j)`, 1-based with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairWeight {
    pub i: usize,
    pub j: usize,
    pub z: f64,
}

fn split_scores(samples: &[ScoredSample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in samples {
        if !s.score.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite score {}",
                s.score
            )));
        }
        match s.label {
            Label::Positive => pos.push(s.score),
            Label::Negative => neg.push(s.score),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedAuc);
    }
    Ok((pos, neg))
}

/// AUC with 0.5 credit for ties, via the Mann-Whitney rank-sum.
///
/// Sorts once and assigns average ranks to tied groups: `O(n log n)`.
pub fn auc_exact(samples: &[ScoredSample]) -> Result<f64> {
    let (pos, neg) = split_scores(samples)?;
    Ok(rank_sum_auc(&pos, &neg))
}

/// [`auc_exact`] for scores already split by class.
pub fn auc_from_split(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedAuc);
    }
    if pos.iter().chain(neg).any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("non-finite score".into()));
    }
    Ok(rank_sum_auc(pos, neg))
}

fn rank_sum_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = Vec::with_capacity(pos.len() + neg.len());
    all.extend(pos.iter().map(|&s| (s, true)));
    all.extend(neg.iter().map(|&s| (s, false)));
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // twice the rank sum keeps tie averages integral
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let mut pos_in_group: u128 = 0;
        while j < all.len() && all[j].0 == all[i].0 {
            pos_in_group += all[j].1 as u128;
            j += 1;
        }
        // ranks i+1 ..= j, average (i + 1 + j) / 2
        twice_rank_sum += pos_in_group * (i + 1 + j) as u128;
        i = j;
    }
    let n_pos = pos.len() as u128;
    let n_neg = neg.len() as u128;
    // 2U = 2R - nP(nP + 1)
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    twice_u as f64 / (2 * n_pos * n_neg) as f64
}

/// Mean surrogate loss over all positive/negative pairs.
pub fn empirical_pn_risk(samples: &[ScoredSample], loss: SurrogateLoss) -> Result<f64> {
    let (pos, neg) = split_scores(samples)?;
    pairwise_mean(&pos, &neg, loss)
}

fn pairwise_mean(upper: &[f64], lower: &[f64], loss: SurrogateLoss) -> Result<f64> {
    if upper.is_empty() || lower.is_empty() {
        return Err(Error::Empty("pairwise risk needs two non-empty sides"));
    }
    let mut total = 0.0;
    for &s in upper {
        for &t in lower {
            total += loss.eval(s - t);
        }
    }
    Ok(total / (upper.len() * lower.len()) as f64)
}

/// Risk between two bags, treating the higher-ranked `bag_i` as positive.
pub fn empirical_u2_risk(bag_i: &[f64], bag_j: &[f64], loss: SurrogateLoss) -> Result<f64> {
    pairwise_mean(bag_i, bag_j, loss)
}

/// `sum_{i<j} z_ij * empirical_u2_risk(i, j)`. Pairs not listed weigh zero.
///
/// `bag_scores[i]` holds the scores of bag `i + 1`.
pub fn empirical_um_risk(
    bag_scores: &[Vec<f64>],
    weights: &[PairWeight],
    loss: SurrogateLoss,
) -> Result<f64> {
    let m = bag_scores.len();
    if m < 2 {
        return Err(Error::TooFewBags(m));
    }
    let mut any_positive = false;
    for w in weights {
        if w.z < 0.0 || !w.z.is_finite() {
            return Err(Error::NegativeWeight {
                i: w.i,
                j: w.j,
                z: w.z,
            });
        }
        if w.i == 0 || w.i >= w.j || w.j > m {
            return Err(Error::InvalidParameter(format!(
                "pair ({}, {}) is not 1 <= i < j <= {m}",
                w.i, w.j
            )));
        }
        any_positive |= w.z > 0.0;
    }
    if !any_positive {
        return Err(Error::NoPositiveWeight);
    }
    let mut total = 0.0;
    for w in weights.iter().filter(|w| w.z > 0.0) {
        total += w.z * empirical_u2_risk(&bag_scores[w.i - 1], &bag_scores[w.j - 1], loss)?;
    }
    Ok(total)
}

/// Mean of per-label AUCs. `heads[k]` holds label `k + 1` with surrogate labels.
pub fn macro_auc(heads: &[Vec<ScoredSample>]) -> Result<f64> {
    if heads.is_empty() {
        return Err(Error::Empty("macro AUC needs at least one label"));
    }
    let mut sum = 0.0;
    for head in heads {
        sum += auc_exact(head)?;
    }
    Ok(sum / heads.len() as f64)
}

/// [`macro_auc`] from per-bag head outputs.
///
/// `bag_head_scores[i][n][k]` is head `k` on instance `n` of bag `i + 1`.
/// Label `k + 1` takes bags `1..=k+1` as positive and the rest as negative.
pub fn macro_auc_from_bags(bag_head_scores: &[Vec<Vec<f64>>]) -> Result<f64> {
    let m = bag_head_scores.len();
    if m < 2 {
        return Err(Error::TooFewBags(m));
    }
    let mut sum = 0.0;
    for k in 0..m - 1 {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, bag) in bag_head_scores.iter().enumerate() {
            let side = if i <= k { &mut pos } else { &mut neg };
            for heads in bag {
                if heads.len() != m - 1 {
                    return Err(Error::DimensionMismatch {
                        expected: m - 1,
                        found: heads.len(),
                    });
                }
                side.push(heads[k]);
            }
        }
        sum += auc_from_split(&pos, &neg)?;
    }
    Ok(sum / (m - 1) as f64)
}
