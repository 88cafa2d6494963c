//! Draw ordered bags from a Gaussian pool, write them to disk and read them back.

use umauc::bagdata::{
    read_bags, synthesize_collection, write_bags, GaussianPoolSpec, ImbalanceMode, LabelGate,
    PriorKind, PriorSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pool_spec = GaussianPoolSpec::default();
    let pool = pool_spec.generate(7)?;
    let priors = PriorSpec::new(PriorKind::Uniform, 5);
    let bags = synthesize_collection(
        &pool.train,
        &priors,
        &ImbalanceMode::SizeReduction { tau: 0.5 },
        4000,
        7,
    )?;

    let dir = std::env::temp_dir().join("umauc_synth_bags");
    write_bags(&bags, &dir)?;
    let back = read_bags(&dir)?;
    assert_eq!(back, bags);

    let gate = LabelGate::evaluation();
    println!("wrote {} bags to {}", back.m(), dir.display());
    println!("bag  size  prior   realized");
    for bag in back.bags() {
        println!(
            "{:>3} {:>5}  {:.3}   {:.3}",
            bag.id(),
            bag.len(),
            bag.true_prior().unwrap(),
            bag.realized_positive_fraction(&gate).unwrap()
        );
    }
    println!("Bayes AUC of the pool: {:.4}", pool_spec.bayes_auc());
    Ok(())
}
