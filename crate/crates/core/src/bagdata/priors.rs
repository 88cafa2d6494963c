use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::rng::{self, Stream};
use crate::{Error, Result};

const MAX_PRIOR_RESAMPLES: usize = 1000;

/// Law the bag priors are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// Beta(1, 1).
    Uniform,
    /// Beta(5, 1).
    Biased,
    /// Beta(5, 5).
    Concentrated,
    /// Beta(5, 2).
    BiasedConcentrated,
    Explicit(Vec<f64>),
}

impl PriorKind {
    pub fn beta_shape(&self) -> Option<(f64, f64)> {
        match self {
            PriorKind::Uniform => Some((1.0, 1.0)),
            PriorKind::Biased => Some((5.0, 1.0)),
            PriorKind::Concentrated => Some((5.0, 5.0)),
            PriorKind::BiasedConcentrated => Some((5.0, 2.0)),
            PriorKind::Explicit(_) => None,
        }
    }

    /// Short name used in report tables (`D_u`, `D_b`, ...).
    pub fn short_name(&self) -> &'static str {
        match self {
            PriorKind::Uniform => "D_u",
            PriorKind::Biased => "D_b",
            PriorKind::Concentrated => "D_c",
            PriorKind::BiasedConcentrated => "D_bc",
            PriorKind::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorKind::Uniform => f.write_str("uniform"),
            PriorKind::Biased => f.write_str("biased"),
            PriorKind::Concentrated => f.write_str("concentrated"),
            PriorKind::BiasedConcentrated => f.write_str("biased_concentrated"),
            PriorKind::Explicit(p) => {
                let parts: Vec<String> = p.iter().map(f64::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    /// Accepts a kind name, its `D_*` alias, or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" | "D_u" => Ok(PriorKind::Uniform),
            "biased" | "D_b" => Ok(PriorKind::Biased),
            "concentrated" | "D_c" => Ok(PriorKind::Concentrated),
            "biased_concentrated" | "biased-concentrated" | "D_bc" => {
                Ok(PriorKind::BiasedConcentrated)
            }
            list => list
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!("unknown prior kind or value `{v}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(PriorKind::Explicit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub m: usize,
}

impl PriorSpec {
    pub fn new(kind: PriorKind, m: usize) -> Self {
        PriorSpec { kind, m }
    }
}

/// Draws `m` bag priors and returns them in descending order.
///
/// Beta draws use the ratio of two independent Gamma variates. A draw in
/// which every prior is identical is discarded and redrawn.
pub fn sample_priors(spec: &PriorSpec, rng_seed: u64) -> Result<Vec<f64>> {
    let m = spec.m;
    if m < 2 {
        return Err(Error::TooFewBags(m));
    }
    let mut priors = match &spec.kind {
        PriorKind::Explicit(list) => {
            if list.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "explicit prior list has {} entries, expected {m}",
                    list.len()
                )));
            }
            if let Some(p) = list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidParameter(format!("prior {p} outside [0, 1]")));
            }
            if list.iter().all(|&p| p == list[0]) {
                return Err(Error::DegeneratePriors);
            }
            list.clone()
        }
        kind => {
            let (a, b) = kind.beta_shape().expect("beta kind");
            let ga = Gamma::new(a, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let gb = Gamma::new(b, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut rng = rng::stream(rng_seed, Stream::Priors);
            let mut attempt = 0;
            loop {
                let draw: Vec<f64> = (0..m)
                    .map(|_| {
                        let x = ga.sample(&mut rng);
                        let y = gb.sample(&mut rng);
                        x / (x + y)
                    })
                    .collect();
                if draw.iter().any(|&p| p != draw[0]) {
                    break draw;
                }
                attempt += 1;
                if attempt >= MAX_PRIOR_RESAMPLES {
                    return Err(Error::PriorResampleExhausted(attempt));
                }
            }
        }
    };
    priors.sort_by(|a, b| b.total_cmp(a));
    Ok(priors)
}

/// How bag sizes deviate from the balanced `ceil(n_train / m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalanceMode {
    None,
    /// `ceil(m / 2)` random bags shrink to `ceil(tau * n_train / m)`.
    SizeReduction {
        tau: f64,
    },
    /// Sizes are a uniformly random composition of `n_train` into `m` parts.
    Random,
}

impl fmt::Display for ImbalanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImbalanceMode::None => f.write_str("none"),
            ImbalanceMode::SizeReduction { tau } => write!(f, "tau={tau}"),
            ImbalanceMode::Random => f.write_str("random"),
        }
    }
}

impl FromStr for ImbalanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(ImbalanceMode::None),
            "random" => Ok(ImbalanceMode::Random),
            other => {
                let tau = other
                    .strip_prefix("tau=")
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "imbalance must be none, tau=X or random, got `{other}`"
                        ))
                    })?;
                Ok(ImbalanceMode::SizeReduction { tau })
            }
        }
    }
}

fn ceil_tolerant(x: f64) -> usize {
    // products like 0.2 * 100 may land a hair above the integer
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Per-bag sizes for `m` bags drawn from `n_train` instances.
pub fn apply_imbalance(
    mode: &ImbalanceMode,
    m: usize,
    n_train: usize,
    rng_seed: u64,
) -> Result<Vec<usize>> {
    if m < 2 {
        return Err(Error::TooFewBags(m));
    }
    if n_train < m {
        return Err(Error::InvalidParameter(format!(
            "n_train = {n_train} is smaller than m = {m}"
        )));
    }
    let base = n_train.div_ceil(m);
    let mut rng = rng::stream(rng_seed, Stream::Imbalance);
    match *mode {
        ImbalanceMode::None => Ok(vec![base; m]),
        ImbalanceMode::SizeReduction { tau } => {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "reduction ratio tau = {tau} must lie in (0, 1]"
                )));
            }
            let reduced = ceil_tolerant(tau * (n_train as f64 / m as f64)).max(1);
            let mut sizes = vec![base; m];
            for i in index::sample(&mut rng, m, m.div_ceil(2)) {
                sizes[i] = reduced;
            }
            Ok(sizes)
        }
        ImbalanceMode::Random => {
            let mut cuts: Vec<usize> = index::sample(&mut rng, n_train - 1, m - 1)
                .into_iter()
                .map(|c| c + 1)
                .collect();
            cuts.sort_unstable();
            let mut sizes = Vec::with_capacity(m);
            let mut prev = 0;
            for c in cuts {
                sizes.push(c - prev);
                prev = c;
            }
            sizes.push(n_train - prev);
            Ok(sizes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn explicit_priors_pass_through() {
        let spec = PriorSpec::new(PriorKind::Explicit(vec![0.9, 0.1]), 2);
        assert_eq!(sample_priors(&spec, 0).unwrap(), vec![0.9, 0.1]);
        let spec = PriorSpec::new(PriorKind::Explicit(vec![0.1, 0.9, 0.5]), 3);
        assert_eq!(sample_priors(&spec, 0).unwrap(), vec![0.9, 0.5, 0.1]);
    }

    #[test]
    fn explicit_equal_priors_are_degenerate() {
        let spec = PriorSpec::new(PriorKind::Explicit(vec![0.3, 0.3, 0.3]), 3);
        assert!(matches!(
            sample_priors(&spec, 0),
            Err(Error::DegeneratePriors)
        ));
    }

    #[test]
    fn explicit_priors_validated() {
        let wrong_len = PriorSpec::new(PriorKind::Explicit(vec![0.3, 0.2]), 3);
        assert!(sample_priors(&wrong_len, 0).is_err());
        let out_of_range = PriorSpec::new(PriorKind::Explicit(vec![1.3, 0.2]), 2);
        assert!(sample_priors(&out_of_range, 0).is_err());
    }

    #[test]
    fn uniform_priors_sorted_in_unit_interval() {
        let p = sample_priors(&PriorSpec::new(PriorKind::Uniform, 10), 7).unwrap();
        assert_eq!(p.len(), 10);
        assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(
            p,
            sample_priors(&PriorSpec::new(PriorKind::Uniform, 10), 7).unwrap()
        );
    }

    #[test]
    fn beta_means_match_monte_carlo() {
        // mean of Beta(a, b) is a / (a + b)
        for (kind, mean) in [
            (PriorKind::Concentrated, 0.5),
            (PriorKind::Biased, 5.0 / 6.0),
            (PriorKind::BiasedConcentrated, 5.0 / 7.0),
            (PriorKind::Uniform, 0.5),
        ] {
            for seed in 0..3 {
                let p = sample_priors(&PriorSpec::new(kind.clone(), 1000), seed).unwrap();
                let avg = p.iter().sum::<f64>() / p.len() as f64;
                assert!((avg - mean).abs() < 0.05, "{kind}: {avg} vs {mean}");
            }
        }
    }

    #[test]
    fn parse_prior_kinds() {
        assert_eq!("D_u".parse::<PriorKind>().unwrap(), PriorKind::Uniform);
        assert_eq!(
            "biased_concentrated".parse::<PriorKind>().unwrap(),
            PriorKind::BiasedConcentrated
        );
        assert_eq!(
            "0.9, 0.1".parse::<PriorKind>().unwrap(),
            PriorKind::Explicit(vec![0.9, 0.1])
        );
        assert!("bogus".parse::<PriorKind>().is_err());
    }

    #[test]
    fn size_reduction_halves_half_the_bags() {
        let sizes = apply_imbalance(&ImbalanceMode::SizeReduction { tau: 0.5 }, 4, 400, 3).unwrap();
        let mut sorted = sizes.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![50, 50, 100, 100]);
    }

    #[test]
    fn size_reduction_uses_ceil_of_half_m() {
        let sizes =
            apply_imbalance(&ImbalanceMode::SizeReduction { tau: 0.2 }, 5, 1000, 1).unwrap();
        assert_eq!(sizes.iter().filter(|&&s| s == 40).count(), 3);
        assert_eq!(sizes.iter().filter(|&&s| s == 200).count(), 2);
    }

    #[test]
    fn tau_one_equals_balanced() {
        let a = apply_imbalance(&ImbalanceMode::SizeReduction { tau: 1.0 }, 10, 1000, 2).unwrap();
        let b = apply_imbalance(&ImbalanceMode::None, 10, 1000, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, vec![100; 10]);
    }

    #[test]
    fn invalid_tau_rejected() {
        for tau in [0.0, -0.1, 1.5] {
            assert!(matches!(
                apply_imbalance(&ImbalanceMode::SizeReduction { tau }, 4, 100, 0),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn random_sizes_sum_over_many_seeds() {
        for seed in 0..100 {
            let s = apply_imbalance(&ImbalanceMode::Random, 5, 500, seed).unwrap();
            assert_eq!(s.len(), 5);
            assert!(s.iter().all(|&x| x >= 1));
            assert_eq!(s.iter().sum::<usize>(), 500);
        }
    }

    #[test]
    fn parse_imbalance() {
        assert_eq!(
            "none".parse::<ImbalanceMode>().unwrap(),
            ImbalanceMode::None
        );
        assert_eq!(
            "tau=0.4".parse::<ImbalanceMode>().unwrap(),
            ImbalanceMode::SizeReduction { tau: 0.4 }
        );
        assert!("tau=x".parse::<ImbalanceMode>().is_err());
    }

    proptest! {
        #[test]
        fn random_imbalance_always_sums(m in 2usize..30, extra in 0usize..2000, seed: u64) {
            let n = m + extra;
            let s = apply_imbalance(&ImbalanceMode::Random, m, n, seed).unwrap();
            prop_assert_eq!(s.iter().sum::<usize>(), n);
            prop_assert!(s.iter().all(|&x| x >= 1));
        }
    }
}
