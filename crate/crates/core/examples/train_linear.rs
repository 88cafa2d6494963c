//! Train a linear scorer from 2 and from 10 bags of the same pool and compare
//! with the Bayes AUC.

use umauc::bagdata::{
    synthesize_bags, synthesize_collection, GaussianPoolSpec, ImbalanceMode, PriorKind, PriorSpec,
};
use umauc::scorer::LinearScorer;
use umauc::trainer::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GaussianPoolSpec::default();
    let pool = spec.generate(0)?;
    let cfg = TrainConfig {
        eval_every: 10,
        ..Default::default()
    };

    let two = synthesize_bags(&pool.train, &[0.9, 0.1], &[2000, 2000], 0)?;
    let out = train(&two, LinearScorer::init(2, 1, 0)?, &cfg, Some(&pool.test))?;
    print!("2 bags\n{}", out.log.to_csv());

    let ten = synthesize_collection(
        &pool.train,
        &PriorSpec::new(PriorKind::Uniform, 10),
        &ImbalanceMode::None,
        4000,
        0,
    )?;
    let out10 = train(&ten, LinearScorer::init(2, 9, 0)?, &cfg, Some(&pool.test))?;
    let last = out10.log.last().unwrap();
    println!(
        "10 bags: train macro AUC {:.4}, test AUC {:.4}",
        last.train_macro_auc,
        last.test_auc.unwrap()
    );
    println!("Bayes AUC {:.4}", spec.bayes_auc());
    println!(
        "aggregated score at (1, 1): {:.4}",
        out10.scorer().score(&[1.0, 1.0])?
    );
    Ok(())
}
