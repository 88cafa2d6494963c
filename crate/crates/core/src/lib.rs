//! Bipartite ranking from multiple unlabeled bags.
//!
//! Given `m` bags of unlabeled instances whose positive-class priors are known
//! only by their relative order, this crate trains a scorer that maximizes the
//! ordinary positive-vs-negative AUC. Bags are turned into an `m - 1` label
//! multi-label AUC problem ([`reduction`]), each label's square-surrogate AUC
//! risk is rewritten as a min-max problem over per-sample terms ([`minmax`]),
//! and the resulting objective is optimized in `O(n)` time per epoch
//! ([`trainer`]). A naive pairwise solver ([`baseline`]), exact metrics
//! ([`aucmetrics`]) and an experiment harness ([`bench`]) round it out.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod aucmetrics;
pub mod bagdata;
pub mod baseline;
pub mod bench;
pub mod cli;
pub mod error;
pub mod minmax;
pub mod reduction;
pub mod rng;
pub mod scorer;
pub mod trainer;

pub use error::{Error, Result};
