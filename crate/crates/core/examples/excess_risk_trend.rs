//! Gap to the Bayes AUC as the training set grows.

use umauc::bench::{run_excess_risk_trend, ExperimentSpec, EXCESS_RISK_NS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = ExperimentSpec {
        test_size: Some(5000),
        ..Default::default()
    };
    let trend = run_excess_risk_trend(&base, &EXCESS_RISK_NS, 4, 5)?;
    for ((n, gap), cell) in trend.ns.iter().zip(&trend.gaps).zip(&trend.report.cells) {
        println!(
            "n = {n:>5}  gap {gap:+.4}  std {:.4}",
            cell.std_auc.unwrap()
        );
    }
    println!(
        "non-increasing: {}, halved: {}",
        trend.non_increasing(),
        trend.halves()
    );
    Ok(())
}
