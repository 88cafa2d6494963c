//! Test AUC across prior laws and bag counts, printed as a table.

use umauc::bagdata::PriorKind;
use umauc::bench::{run_experiment, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec {
        name: "prior laws".into(),
        priors: vec![
            PriorKind::Uniform,
            PriorKind::Biased,
            PriorKind::Concentrated,
            PriorKind::BiasedConcentrated,
        ],
        ms: vec![2, 4, 10],
        ..Default::default()
    };
    let report = run_experiment(&spec)?;
    print!("{}", report.to_markdown());
    Ok(())
}
