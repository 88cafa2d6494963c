//! Unlabeled bags, their synthesis from a labeled pool, and on-disk layout.
//!
//! A [`BagCollection`] is the only training input: `m` bags whose ids are
//! their rank by (unknown) positive prior, highest first. Instances may carry
//! a hidden label for evaluation, but reading it requires a [`LabelGate`],
//! which the training paths never construct. Training code sees bags through
//! [`UnlabeledBags`], which exposes features and bag membership only.

mod io;
mod pool;
mod priors;

pub use io::{
    read_bags, read_labeled_csv, write_bags, write_instances_csv, Manifest, FORMAT_VERSION,
};
pub use pool::{GaussianPoolSpec, LabeledPool};
pub use priors::{apply_imbalance, sample_priors, ImbalanceMode, PriorKind, PriorSpec};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Binary class of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Positive)
    }

    /// `+1.0` or `-1.0`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// Capability token for reading hidden labels.
///
/// Evaluation and synthesis code create one explicitly; the trainer and the
/// baseline solver never do.
#[derive(Debug)]
pub struct LabelGate(());

impl LabelGate {
    pub fn evaluation() -> Self {
        LabelGate(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    features: Vec<f64>,
    hidden_label: Option<Label>,
}

impl Instance {
    pub fn unlabeled(features: Vec<f64>) -> Self {
        Instance {
            features,
            hidden_label: None,
        }
    }

    pub fn labeled(features: Vec<f64>, label: Label) -> Self {
        Instance {
            features,
            hidden_label: Some(label),
        }
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn has_hidden_label(&self) -> bool {
        self.hidden_label.is_some()
    }

    pub fn hidden_label(&self, _gate: &LabelGate) -> Option<Label> {
        self.hidden_label
    }
}

/// One unlabeled set, identified by its rank position (1 = highest prior).
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    id: usize,
    instances: Vec<Instance>,
    true_prior: Option<f64>,
}

impl Bag {
    pub fn new(id: usize, instances: Vec<Instance>, true_prior: Option<f64>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::Empty("bag has no instances"));
        }
        if id == 0 {
            return Err(Error::InvalidParameter("bag ids are 1-based".into()));
        }
        if let Some(p) = true_prior {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("prior {p} outside [0, 1]")));
            }
        }
        Ok(Bag {
            id,
            instances,
            true_prior,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Prior used at synthesis time, if known. Never read by training code.
    pub fn true_prior(&self) -> Option<f64> {
        self.true_prior
    }

    /// Share of instances whose hidden label is positive.
    pub fn realized_positive_fraction(&self, gate: &LabelGate) -> Option<f64> {
        let mut pos = 0usize;
        for inst in &self.instances {
            match inst.hidden_label(gate)? {
                Label::Positive => pos += 1,
                Label::Negative => {}
            }
        }
        Some(pos as f64 / self.instances.len() as f64)
    }
}

/// `m >= 2` bags with ids `1..=m`, sorted so asserted priors never increase.
#[derive(Debug, Clone, PartialEq)]
pub struct BagCollection {
    bags: Vec<Bag>,
    d: usize,
    seed: Option<u64>,
}

impl BagCollection {
    /// Validates and sorts `bags` by id.
    ///
    /// True priors must be given for every bag or for none. When given they
    /// must be non-increasing in id with `prior[1] > prior[m]`.
    pub fn new(mut bags: Vec<Bag>) -> Result<Self> {
        let m = bags.len();
        if m < 2 {
            return Err(Error::TooFewBags(m));
        }
        bags.sort_by_key(|b| b.id);
        for (pos, bag) in bags.iter().enumerate() {
            if bag.id != pos + 1 {
                return Err(Error::Ordering(format!(
                    "bag ids must be a permutation of 1..={m}"
                )));
            }
        }
        let d = bags[0].instances[0].dim();
        for bag in &bags {
            for inst in &bag.instances {
                if inst.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: inst.dim(),
                    });
                }
            }
        }
        let known = bags.iter().filter(|b| b.true_prior.is_some()).count();
        if known != 0 && known != m {
            return Err(Error::InvalidParameter(
                "true priors must be given for all bags or none".into(),
            ));
        }
        if known == m {
            let priors: Vec<f64> = bags.iter().map(|b| b.true_prior.unwrap()).collect();
            if let Some(w) = priors.windows(2).position(|w| w[0] < w[1]) {
                return Err(Error::Ordering(format!(
                    "prior of bag {} ({}) is below prior of bag {} ({})",
                    w + 1,
                    priors[w],
                    w + 2,
                    priors[w + 1]
                )));
            }
            if priors[0] <= priors[m - 1] {
                return Err(Error::DegeneratePriors);
            }
        }
        Ok(BagCollection {
            bags,
            d,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Replaces the true-prior metadata, revalidating the ordering.
    pub fn with_true_priors(self, priors: Option<Vec<f64>>) -> Result<Self> {
        let seed = self.seed;
        let m = self.bags.len();
        if let Some(p) = &priors {
            if p.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "expected {m} priors, got {}",
                    p.len()
                )));
            }
        }
        let bags = self
            .bags
            .into_iter()
            .enumerate()
            .map(|(i, b)| Bag::new(b.id, b.instances, priors.as_ref().map(|p| p[i])))
            .collect::<Result<Vec<_>>>()?;
        Ok(BagCollection::new(bags)?.with_seed(seed))
    }

    pub fn m(&self) -> usize {
        self.bags.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bags.iter().map(Bag::len).collect()
    }

    pub fn total(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    pub fn true_priors(&self) -> Option<Vec<f64>> {
        self.bags.iter().map(|b| b.true_prior).collect()
    }

    /// The label-free view consumed by the solvers.
    pub fn unlabeled(&self) -> UnlabeledBags<'_> {
        UnlabeledBags { collection: self }
    }
}

/// Features and bag membership, nothing else.
#[derive(Debug, Clone, Copy)]
pub struct UnlabeledBags<'a> {
    collection: &'a BagCollection,
}

/// One instance of the pooled sample: its features and 1-based bag id.
#[derive(Debug, Clone, Copy)]
pub struct PooledInstance<'a> {
    pub features: &'a [f64],
    pub bag: usize,
}

impl<'a> UnlabeledBags<'a> {
    pub fn m(&self) -> usize {
        self.collection.m()
    }

    pub fn d(&self) -> usize {
        self.collection.d()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.collection.sizes()
    }

    pub fn total(&self) -> usize {
        self.collection.total()
    }

    /// Features of every instance in bag `id`.
    pub fn bag_features(&self, id: usize) -> Vec<&'a [f64]> {
        self.collection.bags[id - 1]
            .instances
            .iter()
            .map(Instance::features)
            .collect()
    }

    /// Union of all bags, bag 1 first.
    pub fn pooled(&self) -> Vec<PooledInstance<'a>> {
        let mut out = Vec::with_capacity(self.collection.total());
        for bag in &self.collection.bags {
            for inst in &bag.instances {
                out.push(PooledInstance {
                    features: &inst.features,
                    bag: bag.id,
                });
            }
        }
        out
    }
}

/// Draws bags from a labeled pool following the mixture
/// `p_i(x) = prior_i * p_pos(x) + (1 - prior_i) * p_neg(x)`.
///
/// Each instance flips a `priors[i]` coin for its class, then is drawn
/// uniformly with replacement from that class's part of the pool. The result
/// is sorted by descending prior (ties keep draw order) and bag ids follow
/// that order.
pub fn synthesize_bags(
    pool: &[Instance],
    priors: &[f64],
    sizes: &[usize],
    rng_seed: u64,
) -> Result<BagCollection> {
    if priors.len() != sizes.len() {
        return Err(Error::InvalidParameter(format!(
            "{} priors but {} sizes",
            priors.len(),
            sizes.len()
        )));
    }
    if priors.len() < 2 {
        return Err(Error::TooFewBags(priors.len()));
    }
    if let Some(&p) = priors.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("prior {p} outside [0, 1]")));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter("bag sizes must be >= 1".into()));
    }
    let gate = LabelGate::evaluation();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for inst in pool {
        match inst.hidden_label(&gate) {
            Some(Label::Positive) => positives.push(inst),
            Some(Label::Negative) => negatives.push(inst),
            None => {
                return Err(Error::InvalidParameter(
                    "synthesis pool contains an unlabeled instance".into(),
                ))
            }
        }
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::SingleClassPool);
    }

    let mut rng = rng::stream(rng_seed, Stream::Synthesis);
    let mut drawn: Vec<Vec<Instance>> = Vec::with_capacity(priors.len());
    for (&prior, &size) in priors.iter().zip(sizes) {
        let mut instances = Vec::with_capacity(size);
        for _ in 0..size {
            let part = if rng.random::<f64>() < prior {
                &positives
            } else {
                &negatives
            };
            instances.push(part[rng.random_range(0..part.len())].clone());
        }
        drawn.push(instances);
    }

    let mut order: Vec<usize> = (0..priors.len()).collect();
    order.sort_by(|&a, &b| priors[b].total_cmp(&priors[a]));
    let mut slots: Vec<Option<Vec<Instance>>> = drawn.into_iter().map(Some).collect();
    let bags = order
        .iter()
        .enumerate()
        .map(|(rank, &src)| Bag::new(rank + 1, slots[src].take().unwrap(), Some(priors[src])))
        .collect::<Result<Vec<_>>>()?;
    Ok(BagCollection::new(bags)?.with_seed(Some(rng_seed)))
}

/// Priors, sizes and bags from one seed: the usual synthesis pipeline.
pub fn synthesize_collection(
    pool: &[Instance],
    priors: &PriorSpec,
    imbalance: &ImbalanceMode,
    n_train: usize,
    seed: u64,
) -> Result<BagCollection> {
    let pi = sample_priors(priors, seed)?;
    let sizes = apply_imbalance(imbalance, priors.m, n_train, seed)?;
    synthesize_bags(pool, &pi, &sizes, seed)
}
