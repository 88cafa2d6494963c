//! Direct minimization of the weighted pairwise square loss over bag pairs.
//!
//! Every epoch visits all `sum_{i<j} n_i n_j` cross-bag pairs, so this solver
//! is quadratic in the sample size and capped accordingly. It exists to
//! cross-check the min-max trainer, which reaches the same optimum in one
//! pass per epoch.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aucmetrics::PairWeight;
use crate::bagdata::{BagCollection, Instance, UnlabeledBags};
use crate::reduction::build_plan;
use crate::rng::{self, Stream};
use crate::scorer::{GradientBuffer, Scorer, Sgd};
use crate::trainer::evaluate_auc;
use crate::{Error, Result};

pub const DEFAULT_PAIR_CAP: u64 = 4_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairwiseConfig {
    /// Bag-pair weights; `None` uses the ones implied by the label reduction.
    pub weights: Option<Vec<PairWeight>>,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub margin: f64,
    /// Full-batch gradient descent. When off, each step uses `pair_batch`
    /// sampled pairs.
    pub full_batch: bool,
    pub pair_batch: usize,
    pub pair_cap: u64,
    pub seed: u64,
    /// Log every this many epochs; 0 logs only the last epoch.
    pub eval_every: usize,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        PairwiseConfig {
            weights: None,
            epochs: 200,
            lr: 0.1,
            momentum: 0.9,
            weight_decay: 0.0,
            margin: 1.0,
            full_batch: true,
            pair_batch: 4096,
            pair_cap: DEFAULT_PAIR_CAP,
            seed: 0,
            eval_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub epoch: usize,
    /// Weighted pairwise risk of the model at the start of this epoch.
    pub risk: f64,
    pub test_auc: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineLog {
    pub rows: Vec<BaselineRow>,
}

impl BaselineLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,risk,test_auc,seconds\n");
        for r in &self.rows {
            let t = r.test_auc.map_or("NA".to_string(), |t| t.to_string());
            out.push_str(&format!("{},{},{},{:.6}\n", r.epoch, r.risk, t, r.seconds));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutput<M> {
    pub model: M,
    pub log: BaselineLog,
}

/// Total number of cross-bag pairs.
pub fn pair_count(sizes: &[usize]) -> u64 {
    let mut total = 0u64;
    let mut seen = 0u64;
    for &n in sizes {
        total += seen * n as u64;
        seen += n as u64;
    }
    total
}

fn resolve_weights(cfg: &PairwiseConfig, sizes: &[usize]) -> Result<Vec<PairWeight>> {
    let m = sizes.len();
    let weights = match &cfg.weights {
        Some(w) => w.clone(),
        None => build_plan(sizes)?.pair_weights(),
    };
    let mut any = false;
    for w in &weights {
        if !(w.z >= 0.0 && w.z.is_finite()) {
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
        any |= w.z > 0.0;
    }
    if !any {
        return Err(Error::NoPositiveWeight);
    }
    Ok(weights)
}

/// Weighted pairwise risk and its gradient w.r.t. every instance score.
///
/// `scores[i]` holds bag `i + 1`. Returns the risk and per-bag `d risk / d score`.
pub fn pairwise_risk_and_score_grads(
    scores: &[Vec<f64>],
    weights: &[PairWeight],
    margin: f64,
) -> (f64, Vec<Vec<f64>>) {
    let mut grads: Vec<Vec<f64>> = scores.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut risk = 0.0;
    for w in weights.iter().filter(|w| w.z > 0.0) {
        let (hi, lo) = (&scores[w.i - 1], &scores[w.j - 1]);
        let scale = w.z / (hi.len() * lo.len()) as f64;
        let mut pair_sum = 0.0;
        let mut g_lo = vec![0.0; lo.len()];
        for (u, &s) in hi.iter().enumerate() {
            let mut g_u = 0.0;
            for (v, &t) in lo.iter().enumerate() {
                let r = margin - s + t;
                pair_sum += r * r;
                g_u -= 2.0 * r;
                g_lo[v] += 2.0 * r;
            }
            grads[w.i - 1][u] += scale * g_u;
        }
        for (g, d) in grads[w.j - 1].iter_mut().zip(g_lo) {
            *g += scale * d;
        }
        risk += scale * pair_sum;
    }
    (risk, grads)
}

/// Full gradient of the weighted pairwise risk w.r.t. model parameters.
pub fn pairwise_gradient<M: Scorer>(
    model: &M,
    bags: UnlabeledBags<'_>,
    weights: &[PairWeight],
    margin: f64,
) -> Result<(f64, GradientBuffer)> {
    let feats: Vec<Vec<&[f64]>> = (1..=bags.m()).map(|id| bags.bag_features(id)).collect();
    let scores = single_head_scores(model, &feats)?;
    let (risk, sg) = pairwise_risk_and_score_grads(&scores, weights, margin);
    let mut grads = model.zero_grads();
    for (bag, g) in feats.iter().zip(&sg) {
        for (x, &u) in bag.iter().zip(g) {
            model.accumulate_backward(x, &[u], &mut grads)?;
        }
    }
    grads.mark_as_total();
    Ok((risk, grads))
}

fn single_head_scores<M: Scorer>(model: &M, feats: &[Vec<&[f64]>]) -> Result<Vec<Vec<f64>>> {
    feats
        .iter()
        .map(|bag| bag.iter().map(|x| Ok(model.forward(x)?[0])).collect())
        .collect()
}

/// Gradient descent on the weighted pairwise risk for a single-head model.
pub fn train_pairwise<M: Scorer>(
    collection: &BagCollection,
    mut model: M,
    cfg: &PairwiseConfig,
    test: Option<&[Instance]>,
) -> Result<BaselineOutput<M>> {
    let bags = collection.unlabeled();
    if model.n_heads() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: model.n_heads(),
        });
    }
    if model.input_dim() != bags.d() {
        return Err(Error::DimensionMismatch {
            expected: bags.d(),
            found: model.input_dim(),
        });
    }
    if !(cfg.margin > 0.0 && cfg.margin.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "margin {} must be > 0",
            cfg.margin
        )));
    }
    if !cfg.full_batch && cfg.pair_batch == 0 {
        return Err(Error::InvalidParameter("pair_batch must be >= 1".into()));
    }
    let sizes = bags.sizes();
    let pairs = pair_count(&sizes);
    if pairs > cfg.pair_cap {
        return Err(Error::PairCapExceeded {
            pairs,
            cap: cfg.pair_cap,
        });
    }
    let weights = resolve_weights(cfg, &sizes)?;
    let z_total: f64 = weights.iter().map(|w| w.z).sum();
    let feats: Vec<Vec<&[f64]>> = (1..=bags.m()).map(|id| bags.bag_features(id)).collect();
    let mut opt = Sgd::new(cfg.lr, cfg.momentum, cfg.weight_decay)?;
    let mut rng = rng::stream(cfg.seed, Stream::Pairs);
    let mut log = BaselineLog::default();
    let steps_per_epoch = pairs.div_ceil(cfg.pair_batch.max(1) as u64) as usize;

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let scores = single_head_scores(&model, &feats)?;
        let (risk, sg) = pairwise_risk_and_score_grads(&scores, &weights, cfg.margin);
        if !risk.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                checkpoint: Box::new(crate::scorer::encode_checkpoint(&model, None)),
            });
        }
        if cfg.full_batch {
            let mut grads = model.zero_grads();
            for (bag, g) in feats.iter().zip(&sg) {
                for (x, &u) in bag.iter().zip(g) {
                    model.accumulate_backward(x, &[u], &mut grads)?;
                }
            }
            grads.mark_as_total();
            opt.step(&mut model, &grads)?;
        } else {
            for _ in 0..steps_per_epoch {
                let grads =
                    sampled_pair_gradient(&model, &feats, &weights, z_total, cfg, &mut rng)?;
                opt.step(&mut model, &grads)?;
            }
        }
        let seconds = start.elapsed().as_secs_f64();
        if epoch == cfg.epochs || (cfg.eval_every > 0 && epoch % cfg.eval_every == 0) {
            let test_auc = test.map(|t| evaluate_auc(&model, t)).transpose()?;
            log.rows.push(BaselineRow {
                epoch,
                risk,
                test_auc,
                seconds,
            });
        }
    }
    Ok(BaselineOutput { model, log })
}

/// Unbiased estimate of the risk gradient from `pair_batch` sampled pairs:
/// a bag pair is drawn with probability proportional to its weight, then one
/// instance uniformly from each side.
fn sampled_pair_gradient<M: Scorer>(
    model: &M,
    feats: &[Vec<&[f64]>],
    weights: &[PairWeight],
    z_total: f64,
    cfg: &PairwiseConfig,
    rng: &mut rng::Rng,
) -> Result<GradientBuffer> {
    let mut grads = model.zero_grads();
    let scale = z_total / cfg.pair_batch as f64;
    for _ in 0..cfg.pair_batch {
        let mut t = rng.random::<f64>() * z_total;
        let mut w = &weights[0];
        for cand in weights.iter().filter(|w| w.z > 0.0) {
            w = cand;
            if t < cand.z {
                break;
            }
            t -= cand.z;
        }
        let (hi, lo) = (&feats[w.i - 1], &feats[w.j - 1]);
        let x = hi[rng.random_range(0..hi.len())];
        let y = lo[rng.random_range(0..lo.len())];
        let r = cfg.margin - model.forward(x)?[0] + model.forward(y)?[0];
        model.accumulate_backward(x, &[-2.0 * r * scale], &mut grads)?;
        model.accumulate_backward(y, &[2.0 * r * scale], &mut grads)?;
    }
    grads.mark_as_total();
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aucmetrics::{empirical_um_risk, SurrogateLoss};
    use crate::bagdata::{synthesize_bags, Bag, GaussianPoolSpec, Label, PooledInstance};
    use crate::minmax::{exact_label_vars, h_gradients_with, PerSampleContext};
    use crate::scorer::{LinearScorer, ModelSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bags_from(features: Vec<Vec<Vec<f64>>>) -> BagCollection {
        let bags = features
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                Bag::new(
                    i + 1,
                    b.into_iter().map(Instance::unlabeled).collect(),
                    None,
                )
                .unwrap()
            })
            .collect();
        BagCollection::new(bags).unwrap()
    }

    #[test]
    fn singleton_pair_reaches_quadratic_minimizer() {
        let bags = bags_from(vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]);
        let cfg = PairwiseConfig {
            epochs: 200,
            momentum: 0.0,
            ..Default::default()
        };
        let model = LinearScorer::from_parts(2, vec![0.3, 0.7], vec![0.0]).unwrap();
        let out = train_pairwise(&bags, model, &cfg, None).unwrap();
        let gap =
            out.model.forward(&[1.0, 0.0]).unwrap()[0] - out.model.forward(&[0.0, 1.0]).unwrap()[0];
        assert!((gap - 1.0).abs() < 1e-6, "{gap}");
    }

    #[test]
    fn zero_epochs_is_identity() {
        let bags = bags_from(vec![vec![vec![1.0]], vec![vec![0.0]]]);
        let model = LinearScorer::from_parts(1, vec![0.3], vec![0.1]).unwrap();
        let cfg = PairwiseConfig {
            epochs: 0,
            ..Default::default()
        };
        assert_eq!(
            train_pairwise(&bags, model.clone(), &cfg, None)
                .unwrap()
                .model,
            model
        );
    }

    #[test]
    fn pair_cap_enforced() {
        let bags = bags_from(vec![vec![vec![1.0]; 30], vec![vec![0.0]; 30]]);
        let cfg = PairwiseConfig {
            pair_cap: 899,
            ..Default::default()
        };
        let model = LinearScorer::init(1, 1, 0).unwrap();
        assert!(matches!(
            train_pairwise(&bags, model, &cfg, None),
            Err(Error::PairCapExceeded {
                pairs: 900,
                cap: 899
            })
        ));
        assert_eq!(pair_count(&[2, 3, 4]), 6 + 8 + 12);
    }

    #[test]
    fn rejects_bad_weights_and_heads() {
        let bags = bags_from(vec![vec![vec![1.0]], vec![vec![0.0]], vec![vec![-1.0]]]);
        let model = LinearScorer::init(1, 1, 0).unwrap();
        let neg = PairwiseConfig {
            weights: Some(vec![PairWeight {
                i: 1,
                j: 2,
                z: -0.1,
            }]),
            ..Default::default()
        };
        assert!(matches!(
            train_pairwise(&bags, model.clone(), &neg, None),
            Err(Error::NegativeWeight { .. })
        ));
        let zero = PairwiseConfig {
            weights: Some(vec![PairWeight { i: 1, j: 3, z: 0.0 }]),
            ..Default::default()
        };
        assert!(matches!(
            train_pairwise(&bags, model, &zero, None),
            Err(Error::NoPositiveWeight)
        ));
        let two = LinearScorer::init(1, 2, 0).unwrap();
        assert!(train_pairwise(&bags, two, &PairwiseConfig::default(), None).is_err());
    }

    #[test]
    fn logged_risk_matches_metric_module() {
        let pool = GaussianPoolSpec::default()
            .with_train_size(120)
            .generate(3)
            .unwrap();
        let bags = synthesize_bags(&pool.train, &[0.8, 0.5, 0.2], &[30, 50, 40], 3).unwrap();
        let cfg = PairwiseConfig {
            epochs: 6,
            ..Default::default()
        };
        let model = ModelSpec::mlp(vec![5]).build(2, 1, 1).unwrap();
        let full = train_pairwise(&bags, model.clone(), &cfg, None).unwrap();
        let weights = build_plan(&bags.sizes()).unwrap().pair_weights();
        for row in &full.log.rows {
            let before = PairwiseConfig {
                epochs: row.epoch - 1,
                ..cfg.clone()
            };
            let m = train_pairwise(&bags, model.clone(), &before, None)
                .unwrap()
                .model;
            let scores: Vec<Vec<f64>> = bags
                .bags()
                .iter()
                .map(|b| {
                    b.instances()
                        .iter()
                        .map(|x| m.forward(x.features()).unwrap()[0])
                        .collect()
                })
                .collect();
            let oracle = empirical_um_risk(&scores, &weights, SurrogateLoss::Square).unwrap();
            assert!(
                (row.risk - oracle).abs() < 1e-10,
                "epoch {}: {} vs {oracle}",
                row.epoch,
                row.risk
            );
        }
    }

    #[test]
    fn full_gradient_equals_decomposed_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..20 {
            let m = 2 + trial % 3;
            let features: Vec<Vec<Vec<f64>>> = (0..m)
                .map(|_| {
                    (0..rng.random_range(1..6))
                        .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                        .collect()
                })
                .collect();
            let bags = bags_from(features);
            let model = ModelSpec::mlp(vec![4]).build(2, 1, trial as u64).unwrap();
            let plan = build_plan(&bags.sizes()).unwrap();
            let (_, pair_grads) =
                pairwise_gradient(&model, bags.unlabeled(), &plan.pair_weights(), 1.0).unwrap();

            // mean over labels of grad(mean H_k) / (p_k (1 - p_k)) at exact a, b, alpha
            let pooled: Vec<PooledInstance> = bags.unlabeled().pooled();
            let n = pooled.len() as f64;
            let scores: Vec<f64> = pooled
                .iter()
                .map(|p| model.forward(p.features).unwrap()[0])
                .collect();
            let mut grads = model.zero_grads();
            for k in 1..m {
                let pos: Vec<f64> = pooled
                    .iter()
                    .zip(&scores)
                    .filter(|(p, _)| p.bag <= k)
                    .map(|(_, &s)| s)
                    .collect();
                let neg: Vec<f64> = pooled
                    .iter()
                    .zip(&scores)
                    .filter(|(p, _)| p.bag > k)
                    .map(|(_, &s)| s)
                    .collect();
                let (a, b, alpha) = exact_label_vars(&pos, &neg, 1.0, false).unwrap();
                let p = plan.p(k);
                for (inst, &s) in pooled.iter().zip(&scores) {
                    let ctx = PerSampleContext {
                        label: k,
                        y: Label::from_positive(inst.bag <= k),
                        p,
                    };
                    let g = h_gradients_with(&ctx, s, a, b, alpha, 1.0);
                    let u = g.d_score / (n * p * (1.0 - p) * (m - 1) as f64);
                    model
                        .accumulate_backward(inst.features, &[u], &mut grads)
                        .unwrap();
                }
            }
            for (x, y) in pair_grads.flat().iter().zip(grads.flat()) {
                assert!((x - y).abs() < 1e-8, "trial {trial}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn minibatch_pairs_also_learn() {
        let pool = GaussianPoolSpec::default()
            .with_train_size(400)
            .generate(5)
            .unwrap();
        let bags = synthesize_bags(&pool.train, &[0.9, 0.1], &[200, 200], 5).unwrap();
        let cfg = PairwiseConfig {
            epochs: 3,
            full_batch: false,
            pair_batch: 512,
            lr: 0.05,
            ..Default::default()
        };
        let out = train_pairwise(
            &bags,
            LinearScorer::init(2, 1, 0).unwrap(),
            &cfg,
            Some(&pool.test),
        )
        .unwrap();
        assert!(out.log.rows.last().unwrap().test_auc.unwrap() > 0.9);
    }
}
