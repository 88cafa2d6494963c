//! The minibatch loop that trains an `m - 1` head scorer from ordered bags.
//!
//! Every pooled instance carries the surrogate label vector of its bag. Each
//! minibatch evaluates `H` for every label on every instance, averages over
//! instances and labels, then takes a descent step on the scorer and on the
//! `(a, b)` auxiliaries and an ascent step on `alpha`. The trainer only sees
//! [`UnlabeledBags`]: bag membership and rank order.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aucmetrics::{auc_from_split, macro_auc_from_bags};
use crate::bagdata::{BagCollection, Instance, Label, LabelGate, PooledInstance, UnlabeledBags};
use crate::minmax::{
    decompose_with_margin, exact_label_vars, h_gradients, h_sample, HGradients, MinMaxState,
    PerSampleContext,
};
use crate::reduction::{aggregate_scores, build_plan, ReductionPlan};
use crate::rng::{self, Stream};
use crate::scorer::{encode_checkpoint, Scorer, Sgd};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_primal: f64,
    pub lr_dual: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Both learning rates are multiplied by `lr_decay` every `lr_decay_every` epochs.
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    pub margin: f64,
    /// Keep `alpha >= 0`.
    pub constrained: bool,
    pub seed: u64,
    /// Log every this many epochs; 0 logs only the last epoch.
    pub eval_every: usize,
    /// Set `(a, b, alpha)` to their closed forms on each batch instead of
    /// taking gradient steps on them.
    pub batch_exact: bool,
    /// Each instance feeds one uniformly drawn label instead of all of them.
    pub label_sampling: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 64,
            lr_primal: 0.1,
            lr_dual: 0.1,
            momentum: 0.0,
            weight_decay: 0.0,
            lr_decay: 0.5,
            lr_decay_every: 20,
            margin: 1.0,
            constrained: true,
            seed: 0,
            eval_every: 1,
            batch_exact: false,
            label_sampling: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        for (name, v) in [
            ("lr_primal", self.lr_primal),
            ("lr_dual", self.lr_dual),
            ("margin", self.margin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be > 0"));
            }
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad(format!("lr_decay = {} outside (0, 1]", self.lr_decay));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum = {} outside [0, 1)", self.momentum));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay = {} must be >= 0", self.weight_decay));
        }
        Ok(())
    }

    /// Learning-rate multiplier for 0-based `epoch`.
    pub fn lr_scale(&self, epoch: usize) -> f64 {
        if self.lr_decay_every == 0 {
            return 1.0;
        }
        self.lr_decay.powi((epoch / self.lr_decay_every) as i32)
    }

    fn logs_epoch(&self, epoch: usize) -> bool {
        epoch == self.epochs || (self.eval_every > 0 && epoch % self.eval_every == 0)
    }
}

/// A seeded permutation of `0..pool_size` cut into consecutive batches.
pub fn minibatch_iter(
    pool_size: usize,
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
    }
    let mut idx: Vec<usize> = (0..pool_size).collect();
    idx.shuffle(&mut rng::indexed_stream(
        seed,
        Stream::Shuffle,
        epoch as u64,
    ));
    Ok(idx.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub train_macro_auc: f64,
    pub test_auc: Option<f64>,
    /// Saddle value of label `k`'s objective over the whole pool.
    pub losses: Vec<f64>,
    /// Optimization wall time of this epoch, evaluation excluded.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn header(labels: usize) -> String {
        let mut h = String::from("epoch,train_macro_auc,test_auc");
        for k in 1..=labels {
            h.push_str(&format!(",loss_k{k}"));
        }
        h.push_str(",seconds");
        h
    }

    fn render(&self, with_seconds: bool) -> String {
        let labels = self.rows.first().map_or(0, |r| r.losses.len());
        let mut header = Self::header(labels);
        if !with_seconds {
            header.truncate(header.len() - ",seconds".len());
        }
        let mut out = header + "\n";
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.epoch, r.train_macro_auc));
            match r.test_auc {
                Some(t) => out.push_str(&format!(",{t}")),
                None => out.push_str(",NA"),
            }
            for l in &r.losses {
                out.push_str(&format!(",{l}"));
            }
            if with_seconds {
                out.push_str(&format!(",{:.6}", r.seconds));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        self.render(true)
    }

    /// The CSV without the wall-time column, for reproducibility checks.
    pub fn timing_free_csv(&self) -> String {
        self.render(false)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }
}

/// The final ranking function: the mean of the heads.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedScorer<'a, M> {
    model: &'a M,
}

impl<M: Scorer> AggregatedScorer<'_, M> {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.model.aggregate(x)
    }

    pub fn score_all(&self, xs: &[&[f64]]) -> Result<Vec<f64>> {
        xs.par_iter().map(|x| self.score(x)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput<M> {
    pub model: M,
    pub state: MinMaxState,
    pub log: TrainLog,
    /// Optimization wall time of every epoch.
    pub epoch_seconds: Vec<f64>,
}

impl<M: Scorer> TrainOutput<M> {
    pub fn scorer(&self) -> AggregatedScorer<'_, M> {
        AggregatedScorer { model: &self.model }
    }
}

/// AUC of the aggregated scorer on labeled held-out instances.
pub fn evaluate_auc<M: Scorer>(model: &M, test: &[Instance]) -> Result<f64> {
    let gate = LabelGate::evaluation();
    let scored: Vec<(f64, Label)> = test
        .par_iter()
        .map(|inst| {
            let label = inst
                .hidden_label(&gate)
                .ok_or_else(|| Error::InvalidParameter("test instance without label".into()))?;
            Ok((model.aggregate(inst.features())?, label))
        })
        .collect::<Result<_>>()?;
    let (pos, neg): (Vec<_>, Vec<_>) = scored.into_iter().partition(|(_, l)| l.is_positive());
    auc_from_split(
        &pos.iter().map(|p| p.0).collect::<Vec<_>>(),
        &neg.iter().map(|p| p.0).collect::<Vec<_>>(),
    )
}

fn head_scores<M: Scorer>(model: &M, pool: &[PooledInstance<'_>]) -> Result<Vec<Vec<f64>>> {
    pool.par_iter().map(|p| model.forward(p.features)).collect()
}

/// Per-label saddle values `p (1 - p) (A + B + C)` and the train macro AUC.
fn pool_metrics(
    scores: &[Vec<f64>],
    pool: &[PooledInstance<'_>],
    plan: &ReductionPlan,
    margin: f64,
    constrained: bool,
) -> Result<(f64, Vec<f64>)> {
    let m = plan.m();
    let mut by_bag: Vec<Vec<Vec<f64>>> = vec![Vec::new(); m];
    for (s, p) in scores.iter().zip(pool) {
        by_bag[p.bag - 1].push(s.clone());
    }
    let macro_auc = macro_auc_from_bags(&by_bag)?;
    let mut losses = Vec::with_capacity(m - 1);
    for k in 1..m {
        let (pos, neg) = label_split(scores, pool, k);
        let d = decompose_with_margin(&pos, &neg, margin)?;
        let gap = margin - d.a + d.b;
        let c = if constrained {
            gap.max(0.0).powi(2)
        } else {
            gap * gap
        };
        let p = plan.p(k);
        losses.push(p * (1.0 - p) * (d.a_term + d.b_term + c));
    }
    Ok((macro_auc, losses))
}

fn label_split(scores: &[Vec<f64>], pool: &[PooledInstance<'_>], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (s, p) in scores.iter().zip(pool) {
        if p.bag <= k {
            pos.push(s[k - 1]);
        } else {
            neg.push(s[k - 1]);
        }
    }
    (pos, neg)
}

/// Trains `model` (which must have `m - 1` heads) on the bags.
///
/// `test`, when given, is scored with the aggregated scorer at every logged
/// epoch. The true priors of `collection` are never read.
pub fn train<M: Scorer>(
    collection: &BagCollection,
    model: M,
    cfg: &TrainConfig,
    test: Option<&[Instance]>,
) -> Result<TrainOutput<M>> {
    train_unlabeled(collection.unlabeled(), model, cfg, test)
}

pub fn train_unlabeled<M: Scorer>(
    bags: UnlabeledBags<'_>,
    mut model: M,
    cfg: &TrainConfig,
    test: Option<&[Instance]>,
) -> Result<TrainOutput<M>> {
    cfg.validate()?;
    let m = bags.m();
    let labels = m - 1;
    if model.n_heads() != labels {
        return Err(Error::DimensionMismatch {
            expected: labels,
            found: model.n_heads(),
        });
    }
    if model.input_dim() != bags.d() {
        return Err(Error::DimensionMismatch {
            expected: bags.d(),
            found: model.input_dim(),
        });
    }
    let n = bags.total();
    if cfg.batch_size > n {
        return Err(Error::InvalidParameter(format!(
            "batch_size {} exceeds pool size {n}",
            cfg.batch_size
        )));
    }
    let plan = build_plan(&bags.sizes())?;
    let pool = bags.pooled();
    let d = bags.d();
    let flat: Vec<f64> = pool
        .iter()
        .flat_map(|p| p.features.iter().copied())
        .collect();
    let bag_of: Vec<usize> = pool.iter().map(|p| p.bag).collect();
    let features = |i: usize| &flat[i * d..(i + 1) * d];
    let mut state = MinMaxState::new(labels, cfg.margin, cfg.constrained)?;
    let mut opt = Sgd::new(cfg.lr_primal, cfg.momentum, cfg.weight_decay)?;
    let mut grads = model.zero_grads();
    let mut log = TrainLog::default();
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);
    let mut label_rng = rng::stream(cfg.seed, Stream::Labels);

    let mut upstream = vec![0.0; labels];
    let mut aux = vec![HGradients::default(); labels];
    let mut seen = vec![0usize; labels];
    let mut sides = vec![(0.0, 0usize, 0.0, 0usize); labels];

    let abort = |epoch: usize, model: &M, state: &MinMaxState| Error::NonFiniteLoss {
        epoch,
        checkpoint: Box::new(encode_checkpoint(model, Some(state))),
    };

    if cfg.epochs == 0 {
        log.rows
            .push(log_row(0, &model, &pool, &plan, cfg, test, 0.0)?);
    }

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let scale = cfg.lr_scale(epoch);
        let (lr_p, lr_d) = (cfg.lr_primal * scale, cfg.lr_dual * scale);
        opt.set_lr(lr_p);
        if !cfg.batch_exact {
            state.reset_alpha();
        }

        for batch in minibatch_iter(n, cfg.batch_size, cfg.seed, epoch)? {
            let scores: Vec<Vec<f64>> = batch
                .iter()
                .map(|&i| model.forward(features(i)))
                .collect::<Result<_>>()?;

            if cfg.batch_exact {
                set_batch_exact(&mut state, &scores, &batch, &bag_of, &mut sides);
            }

            grads.zero();
            aux.iter_mut().for_each(|g| *g = HGradients::default());
            seen.iter_mut().for_each(|c| *c = 0);
            let mut batch_loss = 0.0;
            for (s, &i) in scores.iter().zip(&batch) {
                let bag = bag_of[i];
                upstream.iter_mut().for_each(|u| *u = 0.0);
                let chosen = cfg
                    .label_sampling
                    .then(|| label_rng.random_range(1..=labels));
                for k in 1..=labels {
                    if chosen.is_some_and(|c| c != k) {
                        continue;
                    }
                    let ctx = PerSampleContext {
                        label: k,
                        y: Label::from_positive(bag <= k),
                        p: plan.p(k),
                    };
                    let h = h_sample(&ctx, s[k - 1], &state);
                    batch_loss += h;
                    let g = h_gradients(&ctx, s[k - 1], &state);
                    upstream[k - 1] = if chosen.is_some() {
                        g.d_score
                    } else {
                        g.d_score / labels as f64
                    };
                    aux[k - 1].add_scaled(&g, 1.0);
                    seen[k - 1] += 1;
                }
                model.accumulate_backward(features(i), &upstream, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(abort(epoch + 1, &model, &state));
            }
            opt.step(&mut model, &grads)?;
            if !cfg.batch_exact {
                for k in 1..=labels {
                    if seen[k - 1] > 0 {
                        let mut g = HGradients::default();
                        g.add_scaled(&aux[k - 1], 1.0 / seen[k - 1] as f64);
                        state.step_label(k, &g, lr_p, lr_d);
                    }
                }
            }
            state.tick();
        }
        let secs = start.elapsed().as_secs_f64();
        epoch_seconds.push(secs);
        if !model.is_finite() || !state.is_finite() {
            return Err(abort(epoch + 1, &model, &state));
        }
        if cfg.logs_epoch(epoch + 1) {
            let row = log_row(epoch + 1, &model, &pool, &plan, cfg, test, secs)?;
            if row.losses.iter().any(|l| !l.is_finite()) {
                return Err(abort(epoch + 1, &model, &state));
            }
            log.rows.push(row);
        }
    }
    Ok(TrainOutput {
        model,
        state,
        log,
        epoch_seconds,
    })
}

/// Closed-form `(a, b, alpha)` from this batch's scores; a label whose batch
/// misses one pseudo-class keeps that side's previous value.
fn set_batch_exact(
    state: &mut MinMaxState,
    scores: &[Vec<f64>],
    batch: &[usize],
    bag_of: &[usize],
    sides: &mut [(f64, usize, f64, usize)],
) {
    sides.iter_mut().for_each(|s| *s = (0.0, 0, 0.0, 0));
    for (s, &i) in scores.iter().zip(batch) {
        for (k0, side) in sides.iter_mut().enumerate() {
            if bag_of[i] <= k0 + 1 {
                side.0 += s[k0];
                side.1 += 1;
            } else {
                side.2 += s[k0];
                side.3 += 1;
            }
        }
    }
    for (k0, &(ps, pc, ns, nc)) in sides.iter().enumerate() {
        let a = if pc > 0 {
            ps / pc as f64
        } else {
            state.a()[k0]
        };
        let b = if nc > 0 {
            ns / nc as f64
        } else {
            state.b()[k0]
        };
        let alpha = crate::minmax::optimal_alpha(a, b, state.margin(), state.constrained());
        state.set_label(k0 + 1, a, b, alpha);
    }
}

fn log_row<M: Scorer>(
    epoch: usize,
    model: &M,
    pool: &[PooledInstance<'_>],
    plan: &ReductionPlan,
    cfg: &TrainConfig,
    test: Option<&[Instance]>,
    seconds: f64,
) -> Result<LogRow> {
    let scores = head_scores(model, pool)?;
    let (train_macro_auc, losses) = pool_metrics(&scores, pool, plan, cfg.margin, cfg.constrained)?;
    let test_auc = test.map(|t| evaluate_auc(model, t)).transpose()?;
    Ok(LogRow {
        epoch,
        train_macro_auc,
        test_auc,
        losses,
        seconds,
    })
}

/// Closed-form auxiliaries for every label on the full pool.
pub fn exact_state<M: Scorer>(
    model: &M,
    bags: UnlabeledBags<'_>,
    margin: f64,
    constrained: bool,
) -> Result<MinMaxState> {
    let pool = bags.pooled();
    let scores = head_scores(model, &pool)?;
    let labels = bags.m() - 1;
    let mut state = MinMaxState::new(labels, margin, constrained)?;
    for k in 1..=labels {
        let (pos, neg) = label_split(&scores, &pool, k);
        let (a, b, alpha) = exact_label_vars(&pos, &neg, margin, constrained)?;
        state.set_label(k, a, b, alpha);
    }
    Ok(state)
}

/// Mean over the pool of the aggregated score per bag, a quick ordering sanity check.
pub fn bag_mean_scores<M: Scorer>(model: &M, bags: UnlabeledBags<'_>) -> Result<Vec<f64>> {
    (1..=bags.m())
        .map(|id| {
            let feats = bags.bag_features(id);
            let mut sum = 0.0;
            for x in &feats {
                sum += aggregate_scores(&model.forward(x)?)?;
            }
            Ok(sum / feats.len() as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bagdata::{synthesize_bags, GaussianPoolSpec};
    use crate::scorer::{LinearScorer, ModelSpec};
    use proptest::prelude::*;

    fn two_bag(seed: u64, n: usize) -> (BagCollection, Vec<Instance>) {
        let pool = GaussianPoolSpec::default()
            .with_train_size(n)
            .generate(seed)
            .unwrap();
        let bags = synthesize_bags(&pool.train, &[0.9, 0.1], &[n / 2, n / 2], seed).unwrap();
        (bags, pool.test)
    }

    #[test]
    fn batches_cover_pool() {
        let b = minibatch_iter(10, 4, 3, 0).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
        assert_eq!(b, minibatch_iter(10, 4, 3, 0).unwrap());
        assert_ne!(b, minibatch_iter(10, 4, 3, 1).unwrap());
        assert!(minibatch_iter(10, 0, 3, 0).is_err());
    }

    proptest! {
        #[test]
        fn batches_partition_indices(n in 0usize..300, bs in 1usize..50, seed: u64, epoch in 0usize..20) {
            let b = minibatch_iter(n, bs, seed, epoch).unwrap();
            prop_assert_eq!(b.len(), n.div_ceil(bs));
            let mut all: Vec<usize> = b.into_iter().flatten().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn two_bag_gaussian_reaches_high_auc() {
        let (bags, test) = two_bag(0, 2000);
        let model = LinearScorer::init(2, 1, 0).unwrap();
        let out = train(&bags, model, &TrainConfig::default(), Some(&test)).unwrap();
        let auc = out.log.last().unwrap().test_auc.unwrap();
        assert!(auc >= 0.95, "test AUC {auc}");
        assert_eq!(out.log.rows.len(), 50);
        assert!(out.log.rows.windows(2).all(|w| w[0].epoch < w[1].epoch));
    }

    #[test]
    fn same_seed_same_log() {
        let (bags, test) = two_bag(1, 600);
        let cfg = TrainConfig {
            epochs: 5,
            ..Default::default()
        };
        let run = || {
            let model = ModelSpec::mlp(vec![8]).build(2, 1, 4).unwrap();
            train(&bags, model, &cfg, Some(&test)).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.log.timing_free_csv(), b.log.timing_free_csv());
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn true_priors_do_not_matter() {
        let (bags, _) = two_bag(2, 400);
        let edited = bags
            .clone()
            .with_true_priors(Some(vec![0.6, 0.55]))
            .unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            ..Default::default()
        };
        let a = train(&bags, LinearScorer::init(2, 1, 0).unwrap(), &cfg, None).unwrap();
        let b = train(&edited, LinearScorer::init(2, 1, 0).unwrap(), &cfg, None).unwrap();
        assert_eq!(a.log.timing_free_csv(), b.log.timing_free_csv());
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn full_batch_exact_loss_decreases() {
        let (bags, _) = two_bag(3, 1000);
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: bags.total(),
            batch_exact: true,
            momentum: 0.0,
            ..Default::default()
        };
        let out = train(&bags, LinearScorer::init(2, 1, 0).unwrap(), &cfg, None).unwrap();
        let losses: Vec<f64> = out.log.rows.iter().map(|r| r.losses[0]).collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    }

    #[test]
    fn zero_epochs_leaves_model() {
        let (bags, _) = two_bag(4, 200);
        let model = LinearScorer::init(2, 1, 7).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let out = train(&bags, model.clone(), &cfg, None).unwrap();
        assert_eq!(out.model, model);
        assert_eq!(out.log.rows[0].epoch, 0);
    }

    #[test]
    fn rejects_bad_shapes_and_batch() {
        let (bags, _) = two_bag(5, 100);
        let cfg = TrainConfig::default();
        assert!(train(&bags, LinearScorer::init(2, 2, 0).unwrap(), &cfg, None).is_err());
        assert!(train(&bags, LinearScorer::init(3, 1, 0).unwrap(), &cfg, None).is_err());
        let big = TrainConfig {
            batch_size: 101,
            ..Default::default()
        };
        assert!(train(&bags, LinearScorer::init(2, 1, 0).unwrap(), &big, None).is_err());
    }

    #[test]
    fn divergence_aborts_with_checkpoint() {
        let (bags, _) = two_bag(6, 200);
        let cfg = TrainConfig {
            lr_primal: 1e6,
            momentum: 0.0,
            epochs: 50,
            ..Default::default()
        };
        match train(&bags, LinearScorer::init(2, 1, 0).unwrap(), &cfg, None) {
            Err(Error::NonFiniteLoss { checkpoint, .. }) => {
                assert!(checkpoint.starts_with(crate::scorer::CHECKPOINT_MAGIC));
            }
            Err(Error::NonFiniteGradient { .. }) => {}
            other => panic!("expected abort, got {:?}", other.map(|o| o.log)),
        }
    }

    #[test]
    fn log_csv_header() {
        assert_eq!(
            TrainLog::header(2),
            "epoch,train_macro_auc,test_auc,loss_k1,loss_k2,seconds"
        );
    }
}
