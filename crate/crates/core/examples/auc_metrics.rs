//! Exact AUC with ties and the bag-pair ranking risks.

use umauc::aucmetrics::{
    auc_exact, empirical_pn_risk, empirical_u2_risk, empirical_um_risk, PairWeight, ScoredSample,
    SurrogateLoss,
};
use umauc::bagdata::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples: Vec<ScoredSample> = [
        (0.9, true),
        (0.4, true),
        (0.4, false),
        (0.1, false),
        (0.7, false),
    ]
    .iter()
    .map(|&(s, y)| ScoredSample::new(s, Label::from_positive(y)))
    .collect();
    println!("AUC with one tie: {}", auc_exact(&samples)?);
    println!(
        "0-1 ranking risk: {}",
        empirical_pn_risk(&samples, SurrogateLoss::ZeroOne)?
    );
    println!(
        "square ranking risk: {:.4}",
        empirical_pn_risk(&samples, SurrogateLoss::Square)?
    );

    let bags = vec![vec![2.0, 1.5, 0.3], vec![0.8, 0.1], vec![-0.5, 0.2, -1.0]];
    println!(
        "U2 risk bag 1 vs 3: {:.4}",
        empirical_u2_risk(&bags[0], &bags[2], SurrogateLoss::ZeroOne)?
    );
    let weights = [
        PairWeight { i: 1, j: 2, z: 0.5 },
        PairWeight { i: 1, j: 3, z: 1.0 },
        PairWeight { i: 2, j: 3, z: 0.5 },
    ];
    println!(
        "weighted U^m square risk: {:.4}",
        empirical_um_risk(&bags, &weights, SurrogateLoss::Square)?
    );
    Ok(())
}
