//! Shrink half of the bags by a ratio tau and watch the test AUC.

use umauc::bench::{run_imbalance_sweep, ExperimentSpec, IMBALANCE_TAUS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = run_imbalance_sweep(
        &ExperimentSpec {
            name: "size imbalance".into(),
            ..Default::default()
        },
        &IMBALANCE_TAUS,
    )?;
    for c in &report.cells {
        let sizes = &report
            .runs
            .iter()
            .find(|r| report.cells[r.cell].key == c.key)
            .unwrap()
            .bag_sizes;
        println!(
            "{:>8}  {:.4} ± {:.4}  sizes {:?}",
            c.key.imbalance.to_string(),
            c.mean_auc.unwrap(),
            c.std_auc.unwrap(),
            sizes
        );
    }
    Ok(())
}
