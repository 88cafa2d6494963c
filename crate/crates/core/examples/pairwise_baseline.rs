//! The quadratic pairwise solver next to the one-pass min-max trainer.

use umauc::bagdata::{synthesize_bags, GaussianPoolSpec};
use umauc::baseline::{pair_count, train_pairwise, PairwiseConfig};
use umauc::scorer::LinearScorer;
use umauc::trainer::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pool = GaussianPoolSpec::default()
        .with_train_size(600)
        .generate(2)?;
    let bags = synthesize_bags(&pool.train, &[0.85, 0.5, 0.15], &[200, 200, 200], 2)?;
    println!("{} cross-bag pairs", pair_count(&bags.sizes()));

    let base = train_pairwise(
        &bags,
        LinearScorer::init(2, 1, 2)?,
        &PairwiseConfig {
            eval_every: 50,
            ..Default::default()
        },
        Some(&pool.test),
    )?;
    print!("{}", base.log.to_csv());
    let mm = train(
        &bags,
        LinearScorer::init(2, 2, 2)?,
        &TrainConfig::default(),
        Some(&pool.test),
    )?;
    let a = base.log.rows.last().unwrap().test_auc.unwrap();
    let b = mm.log.last().unwrap().test_auc.unwrap();
    println!("pairwise {a:.4}  min-max {b:.4}  diff {:.4}", (a - b).abs());
    Ok(())
}
