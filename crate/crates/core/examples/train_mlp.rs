//! Train the shared-trunk MLP, checkpoint it and score from the reloaded copy.

use umauc::bagdata::{
    synthesize_collection, GaussianPoolSpec, ImbalanceMode, PriorKind, PriorSpec,
};
use umauc::scorer::{read_checkpoint, write_checkpoint, ModelSpec, Scorer};
use umauc::trainer::{evaluate_auc, train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GaussianPoolSpec {
        d: 4,
        mean_pos: vec![0.5; 4],
        mean_neg: vec![-0.5; 4],
        ..Default::default()
    };
    let pool = spec.generate(1)?;
    let bags = synthesize_collection(
        &pool.train,
        &PriorSpec::new(PriorKind::Concentrated, 4),
        &ImbalanceMode::None,
        4000,
        1,
    )?;

    let model = ModelSpec::mlp(vec![32, 32]).build(bags.d(), bags.m() - 1, 1)?;
    println!("MLP with {} parameters", model.param_count());
    let cfg = TrainConfig {
        epochs: 30,
        eval_every: 5,
        ..Default::default()
    };
    let out = train(&bags, model, &cfg, Some(&pool.test))?;
    for r in &out.log.rows {
        println!(
            "epoch {:>3}  macro {:.4}  test {:.4}",
            r.epoch,
            r.train_macro_auc,
            r.test_auc.unwrap()
        );
    }

    let path = std::env::temp_dir().join("umauc_train_mlp.ckpt");
    write_checkpoint(&path, &out.model, Some(&out.state))?;
    let ck = read_checkpoint(&path)?;
    println!(
        "reloaded test AUC {:.4} (Bayes {:.4})",
        evaluate_auc(&ck.model, &pool.test)?,
        spec.bayes_auc()
    );
    println!("alpha per label {:?}", ck.state.unwrap().alpha());
    Ok(())
}
